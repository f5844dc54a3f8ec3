#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "gjepa/cluster.hpp"
#include "gjepa/error.hpp"

namespace gjepa {

std::string_view covariance_name(CovarianceType t) noexcept {
  return t == CovarianceType::full ? "full" : "diagonal";
}

CovarianceType parse_covariance(std::string_view name) {
  if (name == "diag" || name == "diagonal") return CovarianceType::diagonal;
  if (name == "full") return CovarianceType::full;
  fail(Errc::invalid_argument, "unknown covariance type '" + std::string(name) + "'");
}

DenseMatrix GmmModel::covariance_matrix(std::size_t c) const {
  if (type == CovarianceType::full) return covariances[c];
  const std::size_t d = dim();
  DenseMatrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = covariances[c](0, i);
  return m;
}

double covariance_regularization(const DenseMatrix& h) {
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  if (n == 0 || d == 0) return 1e-10;
  double trace = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += h(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (h(r, c) - mean) * (h(r, c) - mean);
    trace += var / static_cast<double>(n);
  }
  return std::max(1e-6 * trace / static_cast<double>(d), 1e-10);
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Lower Cholesky factor in place; false when not positive definite.
bool cholesky(DenseMatrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= a(j, k) * a(j, k);
    if (!(s > 0.0) || !std::isfinite(s)) return false;
    const double l = std::sqrt(s);
    a(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= a(i, k) * a(j, k);
      a(i, j) = t / l;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
  return true;
}

struct PreparedComponent {
  double log_norm = 0.0;        // -0.5 * (d log 2pi + log|Sigma|)
  std::vector<double> inv_var;  // diagonal case
  DenseMatrix chol;             // full case
};

std::vector<PreparedComponent> prepare(const GmmModel& model) {
  const std::size_t d = model.dim();
  std::vector<PreparedComponent> prep(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    auto& p = prep[c];
    double log_det = 0.0;
    if (model.type == CovarianceType::diagonal) {
      p.inv_var.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double v = model.covariances[c](0, i);
        if (!(v > 0.0) || !std::isfinite(v))
          fail(Errc::covariance_collapse, "component " + std::to_string(c) +
                                              " has non-positive variance");
        p.inv_var[i] = 1.0 / v;
        log_det += std::log(v);
      }
    } else {
      p.chol = model.covariances[c];
      if (!cholesky(p.chol))
        fail(Errc::covariance_collapse,
             "component " + std::to_string(c) + " covariance is not positive definite");
      for (std::size_t i = 0; i < d; ++i) log_det += 2.0 * std::log(p.chol(i, i));
    }
    p.log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
  }
  return prep;
}

void check_model(const GmmModel& model, const DenseMatrix& h) {
  if (model.k == 0 || model.weights.size() != model.k || model.means.rows() != model.k ||
      model.covariances.size() != model.k)
    fail(Errc::invalid_argument, "malformed GMM");
  if (h.cols() != model.dim())
    fail(Errc::dimension_mismatch, "GMM dimension " + std::to_string(model.dim()) +
                                       " != data dimension " + std::to_string(h.cols()));
}

}  // namespace

DenseMatrix component_log_densities(const GmmModel& model, const DenseMatrix& h) {
  check_model(model, h);
  const auto prep = prepare(model);
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  DenseMatrix out(n, model.k);
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    std::vector<double> diff(d);
    for (std::size_t c = 0; c < model.k; ++c) {
      const auto& p = prep[c];
      for (std::size_t i = 0; i < d; ++i) diff[i] = h(r, i) - model.means(c, i);
      double maha = 0.0;
      if (model.type == CovarianceType::diagonal) {
        for (std::size_t i = 0; i < d; ++i) maha += diff[i] * diff[i] * p.inv_var[i];
      } else {
        // forward substitution L y = diff, in place
        for (std::size_t i = 0; i < d; ++i) {
          double s = diff[i];
          for (std::size_t j = 0; j < i; ++j) s -= p.chol(i, j) * diff[j];
          diff[i] = s / p.chol(i, i);
          maha += diff[i] * diff[i];
        }
      }
      out(r, c) = p.log_norm - 0.5 * maha;
    }
  }
  if (!out.all_finite()) fail(Errc::covariance_collapse, "non-finite component density");
  return out;
}

Responsibilities e_step(const GmmModel& model, const DenseMatrix& h, double* log_likelihood) {
  DenseMatrix logp = component_log_densities(model, h);
  std::vector<double> log_w(model.k);
  for (std::size_t c = 0; c < model.k; ++c) {
    if (!(model.weights[c] > 0.0))
      fail(Errc::invalid_argument, "mixing weights must be positive");
    log_w[c] = std::log(model.weights[c]);
  }
  const std::size_t n = h.rows();
  std::vector<double> point_ll(n);
  for (std::size_t r = 0; r < n; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.k; ++c) {
      logp(r, c) += log_w[c];
      mx = std::max(mx, logp(r, c));
    }
    double s = 0.0;
    for (std::size_t c = 0; c < model.k; ++c) s += std::exp(logp(r, c) - mx);
    const double lse = mx + std::log(s);
    point_ll[r] = lse;
    for (std::size_t c = 0; c < model.k; ++c) logp(r, c) = std::exp(logp(r, c) - lse);
  }
  if (log_likelihood) {
    double total = 0.0;
    for (double v : point_ll) total += v;
    if (!std::isfinite(total)) fail(Errc::covariance_collapse, "non-finite log-likelihood");
    *log_likelihood = total;
  }
  return Responsibilities{std::move(logp)};
}

namespace {

// Closest matrix to cov (in the EM objective) with every eigenvalue >= floor.
void floor_eigenvalues(DenseMatrix& cov, double floor) {
  const std::size_t d = cov.rows();
  DenseMatrix shifted = cov;
  for (std::size_t i = 0; i < d; ++i) shifted(i, i) -= floor;
  if (cholesky(shifted)) return;
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(cov.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(floor);
  const Eigen::MatrixXd v = eig.eigenvectors();
  Eigen::MatrixXd out = v * lambda.asDiagonal() * v.transpose();
  m = 0.5 * (out + out.transpose());
}

}  // namespace

GmmModel m_step(const DenseMatrix& h, const Responsibilities& resp, CovarianceType type,
                double floor) {
  const DenseMatrix& gamma = resp.gamma;
  if (gamma.rows() != h.rows()) fail(Errc::dimension_mismatch, "m_step: gamma rows != N");
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  const std::size_t k = gamma.cols();
  if (n == 0 || k == 0) fail(Errc::invalid_argument, "m_step on empty input");

  GmmModel model;
  model.k = k;
  model.type = type;
  model.weights.assign(k, 0.0);
  model.means = DenseMatrix(k, d);
  model.covariances.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    double nk = 0.0;
    for (std::size_t r = 0; r < n; ++r) nk += gamma(r, c);
    if (nk < 1e-12) fail(Errc::empty_component, "component " + std::to_string(c) + " is empty");
    model.weights[c] = nk / static_cast<double>(n);

    auto mu = model.means.row(c);
    for (std::size_t r = 0; r < n; ++r) {
      const double g = gamma(r, c);
      for (std::size_t i = 0; i < d; ++i) mu[i] += g * h(r, i);
    }
    for (double& v : mu) v /= nk;

    if (type == CovarianceType::diagonal) {
      DenseMatrix var(1, d);
      for (std::size_t r = 0; r < n; ++r) {
        const double g = gamma(r, c);
        for (std::size_t i = 0; i < d; ++i) {
          const double e = h(r, i) - mu[i];
          var(0, i) += g * e * e;
        }
      }
      for (std::size_t i = 0; i < d; ++i) var(0, i) = std::max(var(0, i) / nk, floor);
      model.covariances.push_back(std::move(var));
    } else {
      DenseMatrix cov(d, d);
      std::vector<double> e(d);
      for (std::size_t r = 0; r < n; ++r) {
        const double g = gamma(r, c);
        for (std::size_t i = 0; i < d; ++i) e[i] = h(r, i) - mu[i];
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j <= i; ++j) cov(i, j) += g * e[i] * e[j];
      }
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          cov(i, j) /= nk;
          cov(j, i) = cov(i, j);
        }
      }
      floor_eigenvalues(cov, floor);
      model.covariances.push_back(std::move(cov));
    }
  }
  return model;
}

GmmModel m_step(const DenseMatrix& h, const Responsibilities& gamma, CovarianceType type) {
  return m_step(h, gamma, type, covariance_regularization(h));
}

double gmm_log_likelihood(const GmmModel& model, const DenseMatrix& h) {
  double ll = 0.0;
  e_step(model, h, &ll);
  return ll;
}

namespace {
PseudoLabels argmax_labels(const Responsibilities& r) {
  PseudoLabels out{LabelSource::gmm, std::vector<int>(r.gamma.rows()), r.gamma.cols()};
  for (std::size_t n = 0; n < r.gamma.rows(); ++n) {
    auto row = r.gamma.row(n);
    out.labels[n] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}
}  // namespace

PseudoLabels predict_gmm(const GmmModel& model, const DenseMatrix& h) {
  return argmax_labels(e_step(model, h));
}

GmmFit run_em(const DenseMatrix& h, GmmModel init, int max_iter, double tol) {
  const double reg = covariance_regularization(h);
  GmmFit fit;
  fit.model = std::move(init);
  double ll = 0.0;
  Responsibilities resp = e_step(fit.model, h, &ll);
  fit.log_likelihood_trace.push_back(ll);
  for (int it = 0; it < max_iter; ++it) {
    fit.model = m_step(h, resp, fit.model.type, reg);
    const double prev = ll;
    resp = e_step(fit.model, h, &ll);
    fit.log_likelihood_trace.push_back(ll);
    ++fit.iterations;
    if (std::abs(ll - prev) < tol) {
      fit.converged = true;
      break;
    }
  }
  fit.model.log_likelihood = ll;
  fit.labels = argmax_labels(resp);
  return fit;
}

GmmFit fit_gmm(const DenseMatrix& h, const GmmOptions& options, Rng& rng) {
  if (options.k == 0) fail(Errc::invalid_argument, "k must be positive");
  if (h.cols() == 0) fail(Errc::invalid_argument, "embedding dimension must be positive");
  if (options.k > h.rows())
    fail(Errc::invalid_argument, "k = " + std::to_string(options.k) + " exceeds N = " +
                                     std::to_string(h.rows()));
  const KMeansResult km = fit_kmeans(h, options.k, options.kmeans_iter, rng);
  Responsibilities one_hot{DenseMatrix(h.rows(), options.k)};
  for (std::size_t r = 0; r < h.rows(); ++r)
    one_hot.gamma(r, static_cast<std::size_t>(km.labels.labels[r])) = 1.0;
  GmmModel init = m_step(h, one_hot, options.covariance);
  return run_em(h, std::move(init), options.max_iter, options.tol);
}

}  // namespace gjepa
