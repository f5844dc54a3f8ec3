#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gjepa/cluster.hpp"
#include "gjepa/error.hpp"

namespace gjepa {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

// Assigns every point to its nearest centroid; returns whether anything moved.
bool assign(const DenseMatrix& h, const DenseMatrix& centroids, std::vector<int>& labels,
            std::vector<double>& dist) {
  bool changed = false;
  const auto n = static_cast<std::int64_t>(h.rows());
#pragma omp parallel for schedule(static) reduction(|| : changed)
  for (std::int64_t ri = 0; ri < n; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double dd = sq_dist(h.row(r), centroids.row(c));
      if (dd < best_d) {
        best_d = dd;
        best = static_cast<int>(c);
      }
    }
    if (labels[r] != best) changed = true;
    labels[r] = best;
    dist[r] = best_d;
  }
  return changed;
}

DenseMatrix seed_plus_plus(const DenseMatrix& h, std::size_t k, Rng& rng) {
  const std::size_t n = h.rows();
  DenseMatrix centroids(k, h.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = true;
    std::copy_n(h.row(idx).begin(), h.cols(), centroids.row(c).begin());
    for (std::size_t r = 0; r < n; ++r) d2[r] = std::min(d2[r], sq_dist(h.row(r), h.row(idx)));
  };

  take(0, uniform_index(rng, n));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) total += d2[r];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += d2[r];
        if (d2[r] > 0.0 && acc > target) {
          pick = r;
          break;
        }
      }
      if (pick == n)  // rounding at the tail
        for (std::size_t r = n; r-- > 0;)
          if (d2[r] > 0.0) {
            pick = r;
            break;
          }
    } else {
      // every remaining point coincides with a centroid: pick an unused index
      std::vector<std::size_t> unused;
      for (std::size_t r = 0; r < n; ++r)
        if (!chosen[r]) unused.push_back(r);
      pick = unused[uniform_index(rng, unused.size())];
    }
    take(c, pick);
  }
  return centroids;
}

}  // namespace

double within_cluster_ss(const DenseMatrix& h, const DenseMatrix& centroids,
                         const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t r = 0; r < h.rows(); ++r)
    s += sq_dist(h.row(r), centroids.row(static_cast<std::size_t>(labels[r])));
  return s;
}

KMeansResult fit_kmeans(const DenseMatrix& h, std::size_t k, int max_iter, Rng& rng) {
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  if (k == 0) fail(Errc::invalid_argument, "k must be positive");
  if (k > n)
    fail(Errc::invalid_argument, "k = " + std::to_string(k) + " exceeds N = " + std::to_string(n));

  KMeansResult res;
  res.centroids = seed_plus_plus(h, k, rng);
  std::vector<int> labels(n, -1);
  std::vector<double> dist(n, 0.0);
  assign(h, res.centroids, labels, dist);
  res.wcss_trace.push_back(within_cluster_ss(h, res.centroids, labels));

  for (int it = 0; it < max_iter; ++it) {
    ++res.iterations;
    // update step
    DenseMatrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto c = static_cast<std::size_t>(labels[r]);
      ++counts[c];
      auto srow = sums.row(c);
      auto hrow = h.row(r);
      for (std::size_t i = 0; i < d; ++i) srow[i] += hrow[i];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t i = 0; i < d; ++i)
        res.centroids(c, i) = sums(c, i) / static_cast<double>(counts[c]);
    }
    // empty clusters take over the worst-served point
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t r = 0; r < n; ++r) {
        const auto lc = static_cast<std::size_t>(labels[r]);
        if (counts[lc] <= 1) continue;  // do not empty another cluster
        const double dd = sq_dist(h.row(r), res.centroids.row(lc));
        if (dd > far_d) {
          far_d = dd;
          far = r;
        }
      }
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      counts[c] = 1;
      std::copy_n(h.row(far).begin(), d, res.centroids.row(c).begin());
    }
    const bool changed = assign(h, res.centroids, labels, dist);
    res.wcss_trace.push_back(within_cluster_ss(h, res.centroids, labels));
    if (!changed) break;
  }
  res.labels = PseudoLabels{LabelSource::kmeans, std::move(labels), k};
  return res;
}

PseudoLabels predict_kmeans(const DenseMatrix& centroids, const DenseMatrix& h) {
  if (centroids.cols() != h.cols())
    fail(Errc::dimension_mismatch, "centroid dimension != data dimension");
  std::vector<int> labels(h.rows(), -1);
  std::vector<double> dist(h.rows());
  assign(h, centroids, labels, dist);
  return PseudoLabels{LabelSource::kmeans, std::move(labels), centroids.rows()};
}

}  // namespace gjepa
