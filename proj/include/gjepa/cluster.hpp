#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "gjepa/dense_matrix.hpp"
#include "gjepa/random.hpp"

namespace gjepa {

enum class CovarianceType { diagonal, full };

std::string_view covariance_name(CovarianceType t) noexcept;
CovarianceType parse_covariance(std::string_view name);

/// Gaussian mixture. For CovarianceType::full each entry of `covariances` is
/// d x d; for CovarianceType::diagonal it is 1 x d (the variances).
struct GmmModel {
  std::size_t k = 0;
  CovarianceType type = CovarianceType::diagonal;
  std::vector<double> weights;  // mixing coefficients, sum to 1
  DenseMatrix means;            // k x d
  std::vector<DenseMatrix> covariances;
  double log_likelihood = 0.0;  // of the data the model was last evaluated on

  std::size_t dim() const noexcept { return means.cols(); }
  DenseMatrix covariance_matrix(std::size_t component) const;
};

struct Responsibilities {
  DenseMatrix gamma;  // N x k, rows sum to 1
};

enum class LabelSource { gmm, kmeans };

struct PseudoLabels {
  LabelSource source = LabelSource::gmm;
  std::vector<int> labels;  // values in [0, k)
  std::size_t k = 0;
};

/// Variance floor used by the M-step: 1e-6 * trace(Cov(h)) / d, at least
/// 1e-10 so that degenerate inputs still give a positive definite model.
double covariance_regularization(const DenseMatrix& h);

/// Log-density of every point under every component (N x k), without the
/// mixing weights. Throws Errc::covariance_collapse when a covariance is not
/// positive definite or a density is non-finite.
DenseMatrix component_log_densities(const GmmModel& model, const DenseMatrix& h);

/// Posterior responsibilities computed with log-sum-exp. When `log_likelihood`
/// is non-null it receives sum_n log sum_k pi_k N(h_n | mu_k, Sigma_k).
Responsibilities e_step(const GmmModel& model, const DenseMatrix& h,
                        double* log_likelihood = nullptr);

/// Closed-form parameter update given responsibilities. Covariances are the
/// weighted sample covariances with eigenvalues (variances in the diagonal
/// case) raised to at least `floor`, which keeps every EM step an ascent. Throws Errc::empty_component when some column of
/// gamma sums below 1e-12.
GmmModel m_step(const DenseMatrix& h, const Responsibilities& gamma, CovarianceType type,
                double floor);
GmmModel m_step(const DenseMatrix& h, const Responsibilities& gamma,
                CovarianceType type = CovarianceType::diagonal);

double gmm_log_likelihood(const GmmModel& model, const DenseMatrix& h);

/// argmax_k gamma_nk, lowest index on ties.
PseudoLabels predict_gmm(const GmmModel& model, const DenseMatrix& h);

struct GmmOptions {
  std::size_t k = 2;
  int max_iter = 100;
  double tol = 1e-4;
  CovarianceType covariance = CovarianceType::diagonal;
  int kmeans_iter = 100;
};

struct GmmFit {
  GmmModel model;
  PseudoLabels labels;
  std::vector<double> log_likelihood_trace;  // one entry per E-step
  int iterations = 0;
  bool converged = false;
};

/// EM from an explicit starting model.
GmmFit run_em(const DenseMatrix& h, GmmModel init, int max_iter, double tol);

/// EM initialized from a K-means partition drawn with `rng`.
GmmFit fit_gmm(const DenseMatrix& h, const GmmOptions& options, Rng& rng);

struct KMeansResult {
  DenseMatrix centroids;  // k x d
  PseudoLabels labels;
  std::vector<double> wcss_trace;  // within-cluster sum of squares per assignment
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. A cluster that empties is
/// re-seeded at the point farthest from its current centroid.
KMeansResult fit_kmeans(const DenseMatrix& h, std::size_t k, int max_iter, Rng& rng);

/// Nearest centroid, lowest index on ties.
PseudoLabels predict_kmeans(const DenseMatrix& centroids, const DenseMatrix& h);

double within_cluster_ss(const DenseMatrix& h, const DenseMatrix& centroids,
                         const std::vector<int>& labels);

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method).
/// Returns assignment[row] = column.
std::vector<int> solve_assignment(const DenseMatrix& cost);

/// Number of points on which a and b agree.
std::size_t label_agreement(const PseudoLabels& a, const PseudoLabels& b);

/// Renumbers b so that its clusters carry the index of the a-cluster they
/// overlap most with (maximum total overlap over all one-to-one matchings).
PseudoLabels align_labels(const PseudoLabels& a, const PseudoLabels& b);

}  // namespace gjepa
