#pragma once

#include <span>
#include <vector>

#include "gjepa/cluster.hpp"
#include "gjepa/dense_matrix.hpp"

namespace gjepa {

struct LossBreakdown {
  double joint = 0.0;
  double semantic = 0.0;
  double total = 0.0;
  std::vector<double> per_target;  // squared prediction error of each target
};

struct JointLoss {
  double value = 0.0;
  std::vector<double> per_target;
  DenseMatrix grad;  // w.r.t. preds; targets receive no gradient
};

/// (1/t) * sum_k ||pred_k - target_k||^2 with one pooled vector per row.
JointLoss joint_loss(const DenseMatrix& preds, const DenseMatrix& targets);

struct ScoreVector {
  std::vector<double> value;
};

/// Per-node coefficients w_n = V_n / (sum(V) * ||V||) of the score projection.
/// When sum(V) == 0 the labels are shifted to start at 1 first.
std::vector<double> projection_weights(std::span<const int> labels);

/// V^T H / (sum(V) * ||V||) with V the labels cast to reals.
ScoreVector score_projection(std::span<const int> labels, const DenseMatrix& h);

/// Huber / smooth-L1 with threshold beta.
double smooth_l1(double x, double beta);
double smooth_l1_derivative(double x, double beta);

struct SemanticLoss {
  double value = 0.0;
  DenseMatrix grad;  // w.r.t. h
  ScoreVector gmm_score;
  ScoreVector kmeans_score;
};

/// Smooth-L1 discrepancy between the GMM and K-means score projections of h,
/// averaged over the embedding dimensions. Cluster ids are used 1-based
/// (V = label + 1). `vk` must already be aligned to `vg`; both label vectors
/// are constants for differentiation.
SemanticLoss semantic_loss(const PseudoLabels& vg, const PseudoLabels& vk, const DenseMatrix& h,
                           double beta);

LossBreakdown total_loss(double joint, double semantic, std::vector<double> per_target = {});

}  // namespace gjepa
