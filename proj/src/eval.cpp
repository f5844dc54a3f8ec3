#include "gjepa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gjepa/error.hpp"
#include "gjepa/kernels.hpp"
#include "gjepa/optim.hpp"
#include "gjepa/sampling.hpp"
#include "gjepa/trainer.hpp"

namespace gjepa {

namespace {

const std::vector<int>& require_labels(const CsrGraph& g) {
  if (!g.has_labels()) fail(Errc::degenerate_split, "the probe needs node labels");
  return *g.labels();
}

std::vector<int> argmax_rows(const DenseMatrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::string csv_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels,
                std::span<const NodeId> ids) {
  if (ids.empty()) return 0.0;
  std::size_t hit = 0;
  for (NodeId v : ids) hit += predicted[v] == labels[v];
  return static_cast<double>(hit) / static_cast<double>(ids.size());
}

std::vector<int> probe_predict(const GcnLayer& head, const NormalizedAdjacency& adj,
                               const DenseMatrix& embeddings) {
  return argmax_rows(gcn_apply(head, adj, embeddings));
}

ProbeFit train_probe(const CsrGraph& g, const NormalizedAdjacency& adj,
                     const DenseMatrix& embeddings, const Split& split, std::size_t classes,
                     const ProbeOptions& options) {
  const auto& labels = require_labels(g);
  if (embeddings.rows() != g.n_nodes())
    fail(Errc::dimension_mismatch, "embeddings must have one row per node");
  if (classes < 2) fail(Errc::degenerate_split, "the probe needs at least two classes");
  validate_split(split, g.n_nodes());
  std::vector<bool> seen(classes, false);
  for (NodeId v : split.train) {
    if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= classes)
      fail(Errc::degenerate_split, "train node " + std::to_string(v) + " has label " +
                                       std::to_string(labels[v]) + " outside [0, classes)");
    seen[labels[v]] = true;
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (!seen[c]) fail(Errc::degenerate_split, "class " + std::to_string(c) + " has no train node");
  for (const auto* ids : {&split.val, &split.test})
    for (NodeId v : *ids)
      if (labels[v] < 0) fail(Errc::degenerate_split, "evaluation node without a label");

  Rng rng = make_stream(options.seed, Stream::probe);
  ProbeFit fit;
  fit.head = make_gcn_layer(embeddings.cols(), classes, Activation::identity, rng);
  AdamState opt = AdamState::for_param(fit.head.weight);

  // the embeddings are frozen, so the propagation is done once
  const DenseMatrix propagated = kernels::spmm(adj, embeddings);
  const double inv_train = 1.0 / static_cast<double>(split.train.size());
  const bool use_val = !split.val.empty();

  DenseMatrix best = fit.head.weight;
  double best_score = -1.0;
  DenseMatrix grad_logits(g.n_nodes(), classes);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const DenseMatrix logits = kernels::matmul(propagated, fit.head.weight);
    grad_logits.fill(0.0);
    for (NodeId v : split.train) {
      const auto z = logits.row(v);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double x : z) sum += std::exp(x - zmax);
      auto gr = grad_logits.row(v);
      for (std::size_t c = 0; c < classes; ++c)
        gr[c] = (std::exp(z[c] - zmax) / sum - (static_cast<int>(c) == labels[v] ? 1.0 : 0.0)) *
                inv_train;
    }
    adam_step(fit.head.weight, kernels::matmul_tn(propagated, grad_logits), opt, options.lr);

    const auto pred = argmax_rows(kernels::matmul(propagated, fit.head.weight));
    const double score = accuracy(pred, labels, use_val ? split.val : split.train);
    if (score > best_score) {
      best_score = score;
      best = fit.head.weight;
      fit.best_epoch = epoch;
    }
  }
  fit.head.weight = std::move(best);
  const auto pred = argmax_rows(kernels::matmul(propagated, fit.head.weight));
  fit.train_accuracy = accuracy(pred, labels, split.train);
  fit.val_accuracy = accuracy(pred, labels, split.val);
  fit.test_accuracy = accuracy(pred, labels, split.test);
  return fit;
}

ProbeResult summarize_runs(std::vector<double> runs, std::string split) {
  ProbeResult r;
  r.runs = std::move(runs);
  r.split = std::move(split);
  if (r.runs.empty()) return r;
  // offsets from the first run keep the mean exact for constant inputs
  const double base = r.runs.front();
  double offset = 0.0;
  for (double a : r.runs) offset += a - base;
  r.mean = base + offset / static_cast<double>(r.runs.size());
  double sq = 0.0;
  for (double a : r.runs) sq += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(sq / static_cast<double>(r.runs.size()));
  return r;
}

ProbeResult multi_seed_eval(const Dataset& ds, const DenseMatrix& embeddings, int n_runs,
                            SplitProtocol protocol, const ProbeOptions& options) {
  if (n_runs < 2) fail(Errc::invalid_argument, "multi_seed_eval needs at least two runs");
  if (!ds.split) fail(Errc::degenerate_split, "dataset has no split");
  const auto& labels = require_labels(ds.graph);
  const std::size_t classes = count_classes(labels);
  const NormalizedAdjacency adj = build_normalized_adjacency(ds.graph);
  const Split& base = *ds.split;

  std::vector<double> runs;
  for (int r = 0; r < n_runs; ++r) {
    ProbeOptions o = options;
    o.seed = options.seed + static_cast<std::uint64_t>(r);
    Split split = base;
    if (protocol == SplitProtocol::resample) {
      Rng rng = make_stream(options.seed, Stream::split, static_cast<std::uint64_t>(r));
      split = per_class_split(labels, std::max<std::size_t>(1, base.train.size() / classes),
                              base.val.size(), base.test.size(), rng);
    }
    runs.push_back(train_probe(ds.graph, adj, embeddings, split, classes, o).test_accuracy);
  }
  return summarize_runs(std::move(runs), protocol == SplitProtocol::fixed ? "fixed" : "resample");
}

std::vector<SweepRow> momentum_sweep(const Dataset& ds, const RunConfig& cfg,
                                     const std::vector<double>& m_values, int n_runs,
                                     SplitProtocol protocol) {
  for (double m : m_values)
    if (!(m >= 0.0 && m <= 1.0)) fail(Errc::invalid_argument, "momentum values must lie in [0, 1]");
  std::vector<SweepRow> rows;
  for (double m : m_values) {
    RunConfig c = cfg;
    c.momentum = m;
    const TrainReport report = train(ds.graph, c);
    const DenseMatrix emb = embed(ds.graph, report.best_state);
    SweepRow row;
    row.m = m;
    row.epochs_run = static_cast<int>(report.epochs.size());
    row.probe = multi_seed_eval(ds, emb, n_runs, protocol, {c.probe_epochs, c.probe_lr, c.seed});
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "m,accuracy_mean,accuracy_std,epochs\n";
  for (const auto& r : rows)
    out += csv_double(r.m) + ',' + csv_double(r.probe.mean) + ',' + csv_double(r.probe.std) + ',' +
           std::to_string(r.epochs_run) + '\n';
  return out;
}

SpreadStats spread_stats(const DenseMatrix& embeddings) {
  if (embeddings.size() == 0) fail(Errc::invalid_argument, "spread_stats of an empty matrix");
  const auto all = embeddings.values();
  std::vector<double> v(all.begin(), all.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  SpreadStats s;
  s.count = v.size();
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  const double iqr = s.q3 - s.q1;
  s.whisker_low = *std::lower_bound(v.begin(), v.end(), s.q1 - 1.5 * iqr);
  s.whisker_high = *(std::upper_bound(v.begin(), v.end(), s.q3 + 1.5 * iqr) - 1);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  return s;
}

std::string spread_csv(const std::vector<std::pair<std::string, SpreadStats>>& rows) {
  std::string out = "dataset,min,whisker_low,q1,median,q3,whisker_high,max,mean,count\n";
  for (const auto& [name, s] : rows)
    out += name + ',' + csv_double(s.min) + ',' + csv_double(s.whisker_low) + ',' +
           csv_double(s.q1) + ',' + csv_double(s.median) + ',' + csv_double(s.q3) + ',' +
           csv_double(s.whisker_high) + ',' + csv_double(s.max) + ',' + csv_double(s.mean) + ',' +
           std::to_string(s.count) + '\n';
  return out;
}

double percent_drop(double acc_p, double acc_0) {
  if (!(acc_0 > 0.0)) fail(Errc::degenerate_split, "baseline accuracy is 0; percentage drop undefined");
  return (acc_p - acc_0) / acc_0 * 100.0;
}

std::vector<double> default_distortion_ratios() {
  std::vector<double> r;
  for (int i = 0; i <= 6; ++i) r.push_back((10 + 5 * i) / 100.0);
  return r;
}

std::vector<DistortionRow> distortion_study(const Dataset& ds, const EncoderState& state,
                                            const std::vector<double>& ratios,
                                            const ProbeOptions& options,
                                            std::uint64_t distortion_seed) {
  if (!ds.split) fail(Errc::degenerate_split, "dataset has no split");
  const auto& labels = require_labels(ds.graph);
  const NormalizedAdjacency adj = build_normalized_adjacency(ds.graph);
  const DenseMatrix clean = embed(ds.graph, state);
  const ProbeFit fit =
      train_probe(ds.graph, adj, clean, *ds.split, count_classes(labels), options);
  const double acc0 = accuracy(probe_predict(fit.head, adj, clean), labels, ds.split->test);

  std::vector<DistortionRow> rows;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    Rng rng = make_stream(distortion_seed, Stream::distortion, i);
    const Distortion d = distort_features(ds.graph, ratios[i], ds.split->test, rng);
    const DenseMatrix emb = embed(d.graph, state);
    DistortionRow row;
    row.ratio = ratios[i];
    row.replaced = d.replaced.node_ids.size();
    row.accuracy = accuracy(probe_predict(fit.head, adj, emb), labels, ds.split->test);
    row.drop_percent = percent_drop(row.accuracy, acc0);
    rows.push_back(row);
  }
  return rows;
}

std::string distortion_csv(const std::vector<DistortionRow>& rows) {
  std::string out = "ratio,replaced,accuracy,drop_percent\n";
  for (const auto& r : rows)
    out += csv_double(r.ratio) + ',' + std::to_string(r.replaced) + ',' + csv_double(r.accuracy) +
           ',' + csv_double(r.drop_percent) + '\n';
  return out;
}

}  // namespace gjepa
