#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gjepa/config.hpp"
#include "gjepa/model.hpp"

namespace gjepa {

/// Number of mixture components for a run: cfg.k when set, otherwise the
/// number of distinct non-negative labels of the graph.
std::size_t resolve_cluster_count(const CsrGraph& g, const RunConfig& cfg);

/// Owns the mutable training state for one graph. Single-threaded; the
/// numerical kernels parallelize internally.
class Trainer {
 public:
  Trainer(const CsrGraph& g, RunConfig cfg);
  Trainer(const CsrGraph& g, RunConfig cfg, EncoderState state);

  /// One optimization step: sample, forward, losses, backward, Adam at
  /// cosine_lr(epoch), then the EMA update of the target encoder.
  LossBreakdown train_epoch(int epoch);

  const EncoderState& state() const noexcept { return state_; }
  EncoderState& state() noexcept { return state_; }
  const RunConfig& config() const noexcept { return cfg_; }
  const NormalizedAdjacency& adjacency() const noexcept { return adj_; }
  double last_lr() const noexcept { return last_lr_; }
  /// Last clustering failure message, empty when the last refit succeeded.
  const std::string& cluster_warning() const noexcept { return cluster_warning_; }

 private:
  std::optional<PseudoLabelPair> pseudo_labels(const DenseMatrix& h_ctx, int epoch);

  const CsrGraph& g_;
  RunConfig cfg_;
  NormalizedAdjacency adj_;
  EncoderState state_;
  std::size_t clusters_ = 0;
  std::optional<GmmModel> gmm_;
  std::optional<DenseMatrix> centroids_;
  double last_lr_ = 0.0;
  std::string cluster_warning_;
};

struct TrainOutputs {
  std::filesystem::path checkpoint;  // best state; skipped when empty
  std::filesystem::path metrics;     // JSON lines; skipped when empty
};

struct TrainReport {
  std::vector<LossBreakdown> epochs;
  std::vector<double> learning_rates;
  int best_epoch = 0;
  double best_loss = 0.0;
  bool early_stopped = false;
  std::filesystem::path checkpoint;
  double wall_time_s = 0.0;
  EncoderState best_state;
  EncoderState final_state;
};

/// Runs up to cfg.max_epochs epochs with early stopping on the total loss
/// (stop after more than `patience` epochs without an improvement of at least
/// min_delta). Writes the best state as checkpoint and one metrics line per
/// epoch: {"epoch", "joint", "semantic", "total", "lr"}.
TrainReport train(const CsrGraph& g, const RunConfig& cfg, const TrainOutputs& out = {});

/// Context encoder on the full graph with no sampling: N x D, entries in (-1, 1).
DenseMatrix embed(const CsrGraph& g, const EncoderState& state);

/// One metrics line without trailing newline.
std::string metrics_line(int epoch, const LossBreakdown& loss, double lr);

}  // namespace gjepa
