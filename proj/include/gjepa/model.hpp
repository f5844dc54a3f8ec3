#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gjepa/cluster.hpp"
#include "gjepa/config.hpp"
#include "gjepa/graph.hpp"
#include "gjepa/nn.hpp"
#include "gjepa/objective.hpp"
#include "gjepa/optim.hpp"
#include "gjepa/sampling.hpp"

namespace gjepa {

/// All trainable and EMA-tracked parameters with their optimizer state.
///
/// The context and target encoders share one shape (d -> hidden..., ReLU on
/// every layer but the last, Tanh on the last). Each target has its own
/// two-layer Tanh predictor at the embedding width. `position` is 1 x D for
/// PositionMode::shared, t x D for per_target and empty otherwise.
struct EncoderState {
  std::vector<GcnLayer> context;
  std::vector<AdamState> context_opt;
  std::vector<GcnLayer> target;
  std::vector<std::vector<GcnLayer>> predictors;
  std::vector<std::vector<AdamState>> predictor_opt;
  DenseMatrix position;
  AdamState position_opt;
  PositionMode position_mode = PositionMode::shared;
  int epoch = 0;  // completed epochs
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return context.front().in_dim(); }
  std::size_t embedding_dim() const { return context.back().out_dim(); }
  std::size_t n_targets() const { return predictors.size(); }

  friend bool operator==(const EncoderState&, const EncoderState&) = default;
};

std::vector<GcnLayer> make_encoder(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                   Rng& rng);

EncoderState init_encoder_state(std::size_t in_dim, const RunConfig& cfg);

/// target = m * target + (1 - m) * context, elementwise on every layer,
/// evaluated as std::fma(m, target, (1 - m) * context).
void ema_update(std::vector<GcnLayer>& target, const std::vector<GcnLayer>& context, double m);

/// Adds `proj` to the rows of `h_ctx` (full-graph indexed, zero rows for
/// dropped nodes) that are both active in the target mask and kept in the
/// context sample. Returns the conditioned copy.
DenseMatrix inject_target_position(const DenseMatrix& h_ctx, std::span<const NodeId> target_active,
                                   std::span<const NodeId> context_kept,
                                   std::span<const double> proj);

/// Fixed sinusoidal code of a node index (PositionMode::sinusoidal).
std::vector<double> sinusoidal_code(NodeId node, std::size_t dim);

/// Everything random about one epoch, drawn up front.
struct EpochSample {
  ContextSample context;
  NormalizedAdjacency context_adj;
  std::vector<TargetMask> targets;
};

/// Context sample from stream (seed, context, epoch); target masks from
/// stream (seed, target, epoch).
EpochSample draw_epoch_sample(const CsrGraph& g, const RunConfig& cfg, int epoch);

/// GMM labels and K-means labels aligned to them, indexed by context rows.
struct PseudoLabelPair {
  PseudoLabels gmm;
  PseudoLabels kmeans;
};

/// Called with the context embeddings H' of the epoch; returns the pseudo
/// labels for the semantic term or nullopt to leave it out.
using LabelProvider = std::function<std::optional<PseudoLabelPair>(const DenseMatrix&)>;

struct PipelineGradients {
  std::vector<DenseMatrix> context;
  std::vector<std::vector<DenseMatrix>> predictors;
  DenseMatrix position;
};

struct PipelineResult {
  LossBreakdown loss;
  DenseMatrix context_embeddings;  // H', one row per kept node
  DenseMatrix target_pooled;       // t x D
  DenseMatrix predicted_pooled;    // t x D
  PipelineGradients grads;         // empty unless requested
  bool semantic_active = false;
  // loss.total before the final rounding to double; finite differences of
  // this carry less rounding noise than loss.total
  long double total_extended = 0.0L;
};

/// Forward pass of the whole objective on a frozen sample and, when
/// `need_grads`, the gradients of L = L^J + L^G with respect to the context
/// encoder, the predictors and the position parameters. The target encoder
/// only produces constants.
PipelineResult compute_objective(const EncoderState& state, const CsrGraph& g,
                                 const NormalizedAdjacency& full_adj, const EpochSample& sample,
                                 const LabelProvider& labels, double beta, bool need_grads);

/// Context encoder on the full graph, no sampling.
DenseMatrix encode(const std::vector<GcnLayer>& encoder, const NormalizedAdjacency& adj,
                   const DenseMatrix& features);

}  // namespace gjepa
