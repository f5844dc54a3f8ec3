#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gjepa/cluster.hpp"
#include "gjepa/error.hpp"
#include "support.hpp"

using namespace gjepa;
using gjepa::test::random_matrix;

namespace {

// Points drawn around k random centres.
DenseMatrix blobs(std::size_t n, std::size_t d, std::size_t k, double spread, Rng& rng,
                  std::vector<int>* truth = nullptr) {
  const DenseMatrix centres = random_matrix(k, d, rng, 3.0);
  DenseMatrix h(n, d);
  if (truth) truth->assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = r % k;
    if (truth) (*truth)[r] = static_cast<int>(c);
    for (std::size_t i = 0; i < d; ++i) h(r, i) = centres(c, i) + spread * standard_normal(rng);
  }
  return h;
}

Responsibilities random_gamma(std::size_t n, std::size_t k, Rng& rng) {
  Responsibilities g{DenseMatrix(n, k)};
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += g.gamma(r, c) = 0.05 + uniform01(rng);
    for (std::size_t c = 0; c < k; ++c) g.gamma(r, c) /= s;
  }
  return g;
}

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Same partition up to renaming of the clusters.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

PseudoLabels labels_of(std::vector<int> v, std::size_t k, LabelSource s = LabelSource::kmeans) {
  return PseudoLabels{s, std::move(v), k};
}

}  // namespace

TEST_CASE("covariance names round trip") {
  CHECK(parse_covariance(covariance_name(CovarianceType::full)) == CovarianceType::full);
  CHECK(parse_covariance(covariance_name(CovarianceType::diagonal)) == CovarianceType::diagonal);
  CHECK(parse_covariance("diag") == CovarianceType::diagonal);
  CHECK_THROWS_AS(parse_covariance("spherical"), Error);
}

TEST_CASE("e_step with one component gives gamma 1") {
  Rng rng(1);
  const DenseMatrix h = random_matrix(15, 3, rng);
  Responsibilities ones{DenseMatrix(15, 1, 1.0)};
  const GmmModel m = m_step(h, ones);
  const Responsibilities r = e_step(m, h);
  for (double g : r.gamma.values()) CHECK(g == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("symmetric components split a midpoint evenly") {
  GmmModel m;
  m.k = 2;
  m.type = CovarianceType::full;
  m.weights = {0.5, 0.5};
  m.means = DenseMatrix{{-1.0, 2.0}, {3.0, 2.0}};
  m.covariances = {DenseMatrix::identity(2), DenseMatrix::identity(2)};
  const DenseMatrix mid{{1.0, 2.0}};
  const Responsibilities r = e_step(m, mid);
  CHECK(r.gamma(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.gamma(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("e_step matches the scalar formula in 1-D") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    for (CovarianceType type : {CovarianceType::diagonal, CovarianceType::full}) {
      GmmModel m;
      m.k = 2;
      m.type = type;
      const double w0 = 0.1 + 0.8 * uniform01(rng);
      m.weights = {w0, 1.0 - w0};
      m.means = DenseMatrix{{standard_normal(rng)}, {standard_normal(rng)}};
      const double v0 = 0.2 + uniform01(rng), v1 = 0.2 + uniform01(rng);
      m.covariances = {DenseMatrix{{v0}}, DenseMatrix{{v1}}};
      const DenseMatrix h = random_matrix(20, 1, rng, 1.5);
      double ll = 0.0;
      const Responsibilities r = e_step(m, h, &ll);
      double ll_oracle = 0.0;
      for (std::size_t n = 0; n < 20; ++n) {
        const double a = w0 * normal_pdf(h(n, 0), m.means(0, 0), v0);
        const double b = (1.0 - w0) * normal_pdf(h(n, 0), m.means(1, 0), v1);
        CHECK(std::abs(r.gamma(n, 0) - a / (a + b)) < 1e-10);
        CHECK(std::abs(r.gamma(n, 1) - b / (a + b)) < 1e-10);
        ll_oracle += std::log(a + b);
      }
      CHECK(ll == doctest::Approx(ll_oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("responsibility rows sum to 1 even far from every component") {
  Rng rng(3);
  std::vector<int> truth;
  const DenseMatrix h = blobs(60, 4, 3, 0.5, rng, &truth);
  Responsibilities g{DenseMatrix(60, 3)};
  for (std::size_t r = 0; r < 60; ++r) g.gamma(r, static_cast<std::size_t>(truth[r])) = 1.0;
  for (CovarianceType type : {CovarianceType::diagonal, CovarianceType::full}) {
    const GmmModel m = m_step(h, g, type);
    const DenseMatrix far = random_matrix(30, 4, rng, 1e3);
    for (const DenseMatrix* x : {&h, &far}) {
      const Responsibilities r = e_step(m, *x);
      for (std::size_t n = 0; n < x->rows(); ++n) {
        double s = 0.0;
        for (double v : r.gamma.row(n)) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("m_step with uniform gamma puts every mean at the global mean") {
  Rng rng(4);
  const DenseMatrix h = random_matrix(25, 3, rng);
  const Responsibilities g{DenseMatrix(25, 4, 0.25)};
  const GmmModel m = m_step(h, g);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(m.weights[c] == doctest::Approx(0.25).epsilon(1e-14));
    for (std::size_t i = 0; i < 3; ++i) {
      double mean = 0.0;
      for (std::size_t r = 0; r < 25; ++r) mean += h(r, i) / 25.0;
      CHECK(m.means(c, i) == doctest::Approx(mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("m_step with one-hot gamma gives per-cluster sample means") {
  Rng rng(5);
  std::vector<int> truth;
  const DenseMatrix h = blobs(30, 2, 3, 1.0, rng, &truth);
  Responsibilities g{DenseMatrix(30, 3)};
  for (std::size_t r = 0; r < 30; ++r) g.gamma(r, static_cast<std::size_t>(truth[r])) = 1.0;
  const GmmModel m = m_step(h, g);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 2; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < 30; ++r)
        if (truth[r] == static_cast<int>(c)) s += h(r, i);
      CHECK(m.means(c, i) == doctest::Approx(s / 10.0).epsilon(1e-13));
    }
}

TEST_CASE("m_step matches an explicit-loop oracle on 20 points in 3-D") {
  Rng rng(6);
  const DenseMatrix h = random_matrix(20, 3, rng);
  const Responsibilities g = random_gamma(20, 3, rng);
  const double reg = covariance_regularization(h);
  const GmmModel full = m_step(h, g, CovarianceType::full);
  const GmmModel diag = m_step(h, g, CovarianceType::diagonal);
  double total = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double nk = 0.0;
    for (std::size_t n = 0; n < 20; ++n) nk += g.gamma(n, c);
    CHECK(full.weights[c] == doctest::Approx(nk / 20.0).epsilon(1e-14));
    total += full.weights[c];
    double mu[3] = {0, 0, 0};
    for (std::size_t n = 0; n < 20; ++n)
      for (std::size_t i = 0; i < 3; ++i) mu[i] += g.gamma(n, c) * h(n, i) / nk;
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(full.means(c, i) == doctest::Approx(mu[i]).epsilon(1e-12));
      for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t n = 0; n < 20; ++n)
          s += g.gamma(n, c) * (h(n, i) - mu[i]) * (h(n, j) - mu[j]);
        const double expect = i == j ? std::max(s / nk, reg) : s / nk;
        CHECK(full.covariances[c](i, j) == doctest::Approx(expect).epsilon(1e-12));
        if (i == j) CHECK(diag.covariances[c](0, i) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("m_step rejects an empty component") {
  Rng rng(7);
  const DenseMatrix h = random_matrix(5, 2, rng);
  Responsibilities g{DenseMatrix(5, 2)};
  for (std::size_t r = 0; r < 5; ++r) g.gamma(r, 0) = 1.0;
  try {
    m_step(h, g);
    FAIL("expected empty_component");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_component);
  }
}

TEST_CASE("m_step then e_step reproduces the generating assignment") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> truth;
    const std::size_t k = 2 + trial % 3;
    const DenseMatrix h = blobs(40 + 10 * k, 3, k, 0.1, rng, &truth);
    Responsibilities g{DenseMatrix(h.rows(), k)};
    for (std::size_t r = 0; r < h.rows(); ++r) g.gamma(r, static_cast<std::size_t>(truth[r])) = 1.0;
    for (CovarianceType type : {CovarianceType::diagonal, CovarianceType::full}) {
      const GmmModel m = m_step(h, g, type);
      CHECK(predict_gmm(m, h).labels == truth);
    }
  }
}

TEST_CASE("EM log-likelihood never decreases over 100 random fits") {
  Rng rng(20240602);
  double worst_drop = 0.0;
  for (int fit = 0; fit < 100; ++fit) {
    const std::size_t n = 10 + uniform_index(rng, 191);
    const std::size_t d = 1 + uniform_index(rng, 8);
    const std::size_t k = 1 + uniform_index(rng, 4);
    const CovarianceType type = fit % 2 ? CovarianceType::full : CovarianceType::diagonal;
    const DenseMatrix h = blobs(n, d, 1 + uniform_index(rng, 4), 1.0, rng);
    const GmmModel init = m_step(h, random_gamma(n, k, rng), type);
    const GmmFit result = run_em(h, init, 100, 0.0);
    const auto& trace = result.log_likelihood_trace;
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
      CHECK(trace[i] >= trace[i - 1] - 1e-8);
    }
    double sum = 0.0;
    for (double w : result.model.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  MESSAGE("largest log-likelihood decrease: ", worst_drop);
}

TEST_CASE("fit_gmm recovers two separated 1-D blobs") {
  Rng rng(9);
  DenseMatrix h(100, 1);
  std::vector<int> truth(100);
  for (std::size_t r = 0; r < 100; ++r) {
    truth[r] = r < 50 ? 0 : 1;
    h(r, 0) = (r < 50 ? -5.0 : 5.0) + std::sqrt(0.1) * standard_normal(rng);
  }
  Rng fit_rng(1);
  const GmmFit f = fit_gmm(h, GmmOptions{}, fit_rng);
  CHECK(same_partition(f.labels.labels, truth));
  CHECK(f.converged);
}

TEST_CASE("fit_gmm with k = 1 is the sample mean and covariance") {
  Rng rng(10);
  const DenseMatrix h = random_matrix(50, 3, rng);
  const double reg = covariance_regularization(h);
  for (CovarianceType type : {CovarianceType::diagonal, CovarianceType::full}) {
    GmmOptions o;
    o.k = 1;
    o.covariance = type;
    Rng fit_rng(2);
    const GmmFit f = fit_gmm(h, o, fit_rng);
    const DenseMatrix cov = f.model.covariance_matrix(0);
    for (std::size_t i = 0; i < 3; ++i) {
      double mi = 0.0;
      for (std::size_t r = 0; r < 50; ++r) mi += h(r, i) / 50.0;
      CHECK(f.model.means(0, i) == doctest::Approx(mi).epsilon(1e-12));
      for (std::size_t j = 0; j < 3; ++j) {
        double mj = 0.0, s = 0.0;
        for (std::size_t r = 0; r < 50; ++r) mj += h(r, j) / 50.0;
        for (std::size_t r = 0; r < 50; ++r) s += (h(r, i) - mi) * (h(r, j) - mj) / 50.0;
        if (type == CovarianceType::diagonal && i != j) s = 0.0;
        CHECK(cov(i, j) == doctest::Approx(i == j ? std::max(s, reg) : s).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("fit_gmm is deterministic and validates k") {
  Rng rng(11);
  const DenseMatrix h = blobs(60, 4, 3, 1.0, rng);
  GmmOptions o;
  o.k = 3;
  Rng a(5), b(5);
  const GmmFit f1 = fit_gmm(h, o, a);
  const GmmFit f2 = fit_gmm(h, o, b);
  CHECK(f1.model.means == f2.model.means);
  CHECK(f1.model.weights == f2.model.weights);
  CHECK(f1.labels.labels == f2.labels.labels);
  o.k = 61;
  CHECK_THROWS_AS(fit_gmm(h, o, a), Error);
}

TEST_CASE("regularization keeps a degenerate cloud positive definite") {
  const DenseMatrix same(10, 3, 2.0);
  CHECK(covariance_regularization(same) == 1e-10);
  Responsibilities g{DenseMatrix(10, 1, 1.0)};
  for (CovarianceType type : {CovarianceType::diagonal, CovarianceType::full}) {
    const GmmModel m = m_step(same, g, type);
    const DenseMatrix cov = m.covariance_matrix(0);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(cov(i, j) == doctest::Approx(i == j ? 1e-10 : 0.0));
    CHECK_NOTHROW(e_step(m, same));
  }
}

TEST_CASE("full covariance floor raises only the small eigenvalues") {
  // points on a line along (1,1): sample covariance has eigenvalues 2v and 0
  DenseMatrix h(4, 2);
  for (std::size_t r = 0; r < 4; ++r) h(r, 0) = h(r, 1) = static_cast<double>(r);
  Responsibilities g{DenseMatrix(4, 1, 1.0)};
  const GmmModel m = m_step(h, g, CovarianceType::full, 0.1);
  const DenseMatrix& c = m.covariances[0];
  // v = 1.25; eigenpairs (2.5, (1,1)/sqrt2) and (0.1, (1,-1)/sqrt2)
  CHECK(c(0, 0) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(c(1, 1) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(c(0, 1) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(c(1, 0) == c(0, 1));
}

TEST_CASE("k-means recovers two separated blobs") {
  Rng rng(12);
  DenseMatrix h(80, 2);
  std::vector<int> truth(80);
  for (std::size_t r = 0; r < 80; ++r) {
    truth[r] = r % 2;
    h(r, 0) = (r % 2 ? 6.0 : -6.0) + standard_normal(rng);
    h(r, 1) = standard_normal(rng);
  }
  Rng fit_rng(3);
  const KMeansResult km = fit_kmeans(h, 2, 100, fit_rng);
  CHECK(same_partition(km.labels.labels, truth));
  CHECK(km.labels.source == LabelSource::kmeans);
}

TEST_CASE("k-means with k = N puts every point alone") {
  Rng rng(13);
  const DenseMatrix h = random_matrix(12, 3, rng);
  Rng fit_rng(4);
  const KMeansResult km = fit_kmeans(h, 12, 100, fit_rng);
  std::vector<int> sorted = km.labels.labels;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(12);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
  CHECK(within_cluster_ss(h, km.centroids, km.labels.labels) == doctest::Approx(0.0));
}

TEST_CASE("k-means WCSS is nonincreasing and runs are deterministic") {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const DenseMatrix h = blobs(30 + uniform_index(rng, 100), 1 + uniform_index(rng, 6),
                                1 + uniform_index(rng, 5), 1.5, rng);
    const std::size_t k = 1 + uniform_index(rng, 6);
    Rng a(trial), b(trial);
    const KMeansResult r1 = fit_kmeans(h, k, 100, a);
    const KMeansResult r2 = fit_kmeans(h, k, 100, b);
    CHECK(r1.centroids == r2.centroids);
    CHECK(r1.labels.labels == r2.labels.labels);
    for (std::size_t i = 1; i < r1.wcss_trace.size(); ++i)
      CHECK(r1.wcss_trace[i] <= r1.wcss_trace[i - 1] * (1.0 + 1e-12));
    CHECK(predict_kmeans(r1.centroids, h).labels == r1.labels.labels);
  }
}

TEST_CASE("solve_assignment matches brute force") {
  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    DenseMatrix cost(n, n);
    for (double& c : cost.values()) c = static_cast<double>(uniform_index(rng, 10));
    const std::vector<int> got = solve_assignment(cost);
    double got_cost = 0.0;
    for (std::size_t r = 0; r < n; ++r) got_cost += cost(r, static_cast<std::size_t>(got[r]));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double c = 0.0;
      for (std::size_t r = 0; r < n; ++r) c += cost(r, static_cast<std::size_t>(perm[r]));
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got_cost == best);
    std::vector<int> sorted = got;
    std::sort(sorted.begin(), sorted.end());
    std::iota(perm.begin(), perm.end(), 0);
    CHECK(sorted == perm);
  }
}

TEST_CASE("align_labels undoes a permutation and keeps identical labels") {
  const PseudoLabels a = labels_of({0, 0, 1, 2, 2, 1, 0}, 3, LabelSource::gmm);
  const PseudoLabels b = labels_of({2, 2, 0, 1, 1, 0, 2}, 3);
  CHECK(align_labels(a, b).labels == a.labels);
  CHECK(align_labels(a, a).labels == a.labels);
  CHECK(align_labels(a, b).source == LabelSource::kmeans);
}

TEST_CASE("align_labels reaches the best overlap of an exhaustive search") {
  Rng rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + uniform_index(rng, 5);
    const std::size_t n = 5 + uniform_index(rng, 40);
    std::vector<int> va(n), vb(n);
    for (std::size_t i = 0; i < n; ++i) {
      va[i] = static_cast<int>(uniform_index(rng, k));
      vb[i] = uniform01(rng) < 0.6 ? (va[i] + 1) % static_cast<int>(k)
                                   : static_cast<int>(uniform_index(rng, k));
    }
    const PseudoLabels a = labels_of(va, k, LabelSource::gmm), b = labels_of(vb, k);
    const PseudoLabels aligned = align_labels(a, b);

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
      std::size_t hit = 0;
      for (std::size_t i = 0; i < n; ++i) hit += perm[vb[i]] == va[i];
      best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));

    CHECK(label_agreement(a, aligned) == best);
    CHECK(label_agreement(a, aligned) >= label_agreement(a, b));
    CHECK(same_partition(aligned.labels, vb));
    CHECK(align_labels(a, aligned).labels == aligned.labels);
  }
}
