#include "gjepa/objective.hpp"

#include <cmath>
#include <string>

#include "gjepa/error.hpp"

namespace gjepa {

JointLoss joint_loss(const DenseMatrix& preds, const DenseMatrix& targets) {
  if (!preds.same_shape(targets))
    fail(Errc::dimension_mismatch, "joint_loss: predictions and targets differ in shape");
  const std::size_t t = preds.rows();
  if (t == 0) fail(Errc::invalid_argument, "joint_loss needs at least one target");
  JointLoss out;
  out.grad = DenseMatrix(t, preds.cols());
  out.per_target.resize(t);
  const double scale = 1.0 / static_cast<double>(t);
  for (std::size_t k = 0; k < t; ++k) {
    double sq = 0.0;
    for (std::size_t c = 0; c < preds.cols(); ++c) {
      const double e = preds(k, c) - targets(k, c);
      sq += e * e;
      out.grad(k, c) = 2.0 * scale * e;
    }
    out.per_target[k] = sq;
    out.value += sq;
  }
  out.value *= scale;
  return out;
}

std::vector<double> projection_weights(std::span<const int> labels) {
  double sum = 0.0;
  for (int l : labels) sum += l;
  const double shift = sum == 0.0 ? 1.0 : 0.0;
  if (shift != 0.0) sum = static_cast<double>(labels.size());
  double sq = 0.0;
  for (int l : labels) sq += (l + shift) * (l + shift);
  const double denom = sum * std::sqrt(sq);
  std::vector<double> w(labels.size());
  if (denom == 0.0) return w;  // empty label vector
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = (labels[i] + shift) / denom;
  return w;
}

namespace {
ScoreVector project(const std::vector<double>& w, const DenseMatrix& h) {
  ScoreVector s{std::vector<double>(h.cols(), 0.0)};
  for (std::size_t n = 0; n < h.rows(); ++n) {
    auto row = h.row(n);
    for (std::size_t c = 0; c < h.cols(); ++c) s.value[c] += w[n] * row[c];
  }
  return s;
}
}  // namespace

ScoreVector score_projection(std::span<const int> labels, const DenseMatrix& h) {
  if (labels.size() != h.rows())
    fail(Errc::dimension_mismatch, "score_projection: labels length != embedding rows");
  return project(projection_weights(labels), h);
}

double smooth_l1(double x, double beta) {
  const double a = std::abs(x);
  return a < beta ? 0.5 * x * x / beta : a - 0.5 * beta;
}

double smooth_l1_derivative(double x, double beta) {
  if (std::abs(x) < beta) return x / beta;
  return x > 0.0 ? 1.0 : -1.0;
}

SemanticLoss semantic_loss(const PseudoLabels& vg, const PseudoLabels& vk, const DenseMatrix& h,
                           double beta) {
  if (!(beta > 0.0)) fail(Errc::invalid_argument, "smooth-L1 threshold must be positive");
  if (vg.labels.size() != h.rows() || vk.labels.size() != h.rows())
    fail(Errc::dimension_mismatch, "semantic_loss: label length != embedding rows");

  auto one_based = [](const PseudoLabels& p) {
    std::vector<int> v(p.labels);
    for (int& l : v) l += 1;
    return v;
  };
  const std::vector<double> wg = projection_weights(one_based(vg));
  const std::vector<double> wk = projection_weights(one_based(vk));

  SemanticLoss out;
  out.gmm_score = project(wg, h);
  out.kmeans_score = project(wk, h);
  const std::size_t d = h.cols();
  out.grad = DenseMatrix(h.rows(), d);
  if (d == 0) return out;

  std::vector<double> dscore(d);
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double x = out.gmm_score.value[c] - out.kmeans_score.value[c];
    out.value += smooth_l1(x, beta);
    dscore[c] = smooth_l1_derivative(x, beta) * inv_d;
  }
  out.value *= inv_d;
  for (std::size_t n = 0; n < h.rows(); ++n) {
    const double coeff = wg[n] - wk[n];
    if (coeff == 0.0) continue;
    auto g = out.grad.row(n);
    for (std::size_t c = 0; c < d; ++c) g[c] = coeff * dscore[c];
  }
  return out;
}

LossBreakdown total_loss(double joint, double semantic, std::vector<double> per_target) {
  if (!std::isfinite(joint) || !std::isfinite(semantic))
    fail(Errc::divergence, "non-finite loss term");
  return LossBreakdown{joint, semantic, joint + semantic, std::move(per_target)};
}

}  // namespace gjepa
