#pragma once

#include <string>
#include <vector>

#include "gjepa/config.hpp"
#include "gjepa/dataset.hpp"
#include "gjepa/model.hpp"
#include "gjepa/nn.hpp"

namespace gjepa {

struct ProbeOptions {
  int epochs = 200;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

/// Trained classification head plus the numbers it was selected on.
struct ProbeFit {
  GcnLayer head;  // D x classes, identity activation
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  int best_epoch = 0;
};

/// Single GCN layer on frozen embeddings, softmax cross-entropy on the train
/// nodes, Adam, keeps the epoch with the best validation accuracy (first on
/// ties; train accuracy when the split has no validation nodes). Throws
/// Errc::degenerate_split when a class in [0, classes) has no train node.
ProbeFit train_probe(const CsrGraph& g, const NormalizedAdjacency& adj,
                     const DenseMatrix& embeddings, const Split& split, std::size_t classes,
                     const ProbeOptions& options);

std::vector<int> probe_predict(const GcnLayer& head, const NormalizedAdjacency& adj,
                               const DenseMatrix& embeddings);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                std::span<const NodeId> ids);

struct ProbeResult {
  std::vector<double> runs;  // test accuracy per run
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::string split;
};

/// mean and population std of `runs`.
ProbeResult summarize_runs(std::vector<double> runs, std::string split);

enum class SplitProtocol {
  fixed,     // the dataset's split every run; only the head seed changes
  resample,  // a fresh per-class split each run, sized like the dataset split
};

/// Repeats the probe `n_runs` times with run-indexed seeds.
ProbeResult multi_seed_eval(const Dataset& ds, const DenseMatrix& embeddings, int n_runs,
                            SplitProtocol protocol, const ProbeOptions& options);

struct SweepRow {
  double m = 0.0;
  ProbeResult probe;
  int epochs_run = 0;
};

/// Full training and probe for every momentum value.
std::vector<SweepRow> momentum_sweep(const Dataset& ds, const RunConfig& cfg,
                                     const std::vector<double>& m_values, int n_runs,
                                     SplitProtocol protocol);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct SpreadStats {
  double min = 0.0;
  double whisker_low = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_high = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

/// Box-plot statistics over every entry. Quartiles interpolate linearly
/// between order statistics; whiskers reach the most extreme entries within
/// 1.5 IQR of the box.
SpreadStats spread_stats(const DenseMatrix& embeddings);

std::string spread_csv(const std::vector<std::pair<std::string, SpreadStats>>& rows);

struct DistortionRow {
  double ratio = 0.0;
  std::size_t replaced = 0;
  double accuracy = 0.0;
  double drop_percent = 0.0;  // negative means degradation
};

/// (acc_p - acc_0) / acc_0 * 100.
double percent_drop(double acc_p, double acc_0);

std::vector<double> default_distortion_ratios();

/// Trains one head on clean embeddings, then for each ratio replaces that
/// share of the test nodes' features with N(0, 1) draws, re-embeds with the
/// frozen encoder and scores with the same head. Throws
/// Errc::degenerate_split if the clean accuracy is 0.
std::vector<DistortionRow> distortion_study(const Dataset& ds, const EncoderState& state,
                                            const std::vector<double>& ratios,
                                            const ProbeOptions& options,
                                            std::uint64_t distortion_seed);

std::string distortion_csv(const std::vector<DistortionRow>& rows);

}  // namespace gjepa
