#include "gjepa/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "gjepa/checkpoint.hpp"
#include "gjepa/error.hpp"

namespace gjepa {

std::size_t resolve_cluster_count(const CsrGraph& g, const RunConfig& cfg) {
  if (cfg.k > 0) return cfg.k;
  if (g.has_labels()) {
    std::set<int> classes;
    for (int l : *g.labels())
      if (l >= 0) classes.insert(l);
    if (!classes.empty()) return classes.size();
  }
  fail(Errc::config_error, "k is required when the graph carries no labels");
}

Trainer::Trainer(const CsrGraph& g, RunConfig cfg)
    : Trainer(g, cfg, init_encoder_state(g.feature_dim(), cfg)) {}

Trainer::Trainer(const CsrGraph& g, RunConfig cfg, EncoderState state)
    : g_(g), cfg_(std::move(cfg)), adj_(build_normalized_adjacency(g)), state_(std::move(state)) {
  cfg_.validate();
  if (state_.input_dim() != g.feature_dim())
    fail(Errc::checkpoint_mismatch, "encoder input width " + std::to_string(state_.input_dim()) +
                                        " != feature width " + std::to_string(g.feature_dim()));
  if (state_.n_targets() != cfg_.targets)
    fail(Errc::config_error, "encoder state has a different number of predictors than targets");
  if (cfg_.semantic) clusters_ = resolve_cluster_count(g, cfg_);
}

std::optional<PseudoLabelPair> Trainer::pseudo_labels(const DenseMatrix& h_ctx, int epoch) {
  const bool refit = epoch % cfg_.gmm_every == 0 || !gmm_ || !centroids_;
  try {
    PseudoLabelPair out;
    if (refit) {
      Rng rng = make_stream(cfg_.seed, Stream::cluster, static_cast<std::uint64_t>(epoch));
      GmmOptions opts;
      opts.k = clusters_;
      opts.max_iter = cfg_.gmm_max_iter;
      opts.tol = cfg_.gmm_tol;
      opts.covariance = cfg_.covariance;
      opts.kmeans_iter = cfg_.kmeans_iter;
      GmmFit fit = fit_gmm(h_ctx, opts, rng);
      KMeansResult km = fit_kmeans(h_ctx, clusters_, cfg_.kmeans_iter, rng);
      gmm_ = std::move(fit.model);
      centroids_ = std::move(km.centroids);
      out.gmm = std::move(fit.labels);
      out.kmeans = std::move(km.labels);
    } else {
      // cached mixture and centroids label this epoch's context rows
      out.gmm = predict_gmm(*gmm_, h_ctx);
      out.kmeans = predict_kmeans(*centroids_, h_ctx);
    }
    out.kmeans = align_labels(out.gmm, out.kmeans);
    cluster_warning_.clear();
    return out;
  } catch (const Error& e) {
    if (e.code() == Errc::divergence) throw;
    cluster_warning_ = e.what();
    if (refit) {
      gmm_.reset();
      centroids_.reset();
    }
    return std::nullopt;
  }
}

LossBreakdown Trainer::train_epoch(int epoch) {
  const LrSchedule schedule{cfg_.lr, cfg_.restart_period, cfg_.min_lr()};
  last_lr_ = cosine_lr(schedule, epoch);
  const EpochSample sample = draw_epoch_sample(g_, cfg_, epoch);

  LabelProvider provider;
  if (cfg_.semantic)
    provider = [this, epoch](const DenseMatrix& h) { return pseudo_labels(h, epoch); };
  PipelineResult res = compute_objective(state_, g_, adj_, sample, provider, cfg_.beta, true);
  if (!std::isfinite(res.loss.total)) fail(Errc::divergence, "non-finite loss");

  for (std::size_t l = 0; l < state_.context.size(); ++l)
    adam_step(state_.context[l].weight, res.grads.context[l], state_.context_opt[l], last_lr_);
  for (std::size_t k = 0; k < state_.predictors.size(); ++k)
    for (std::size_t l = 0; l < state_.predictors[k].size(); ++l)
      adam_step(state_.predictors[k][l].weight, res.grads.predictors[k][l],
                state_.predictor_opt[k][l], last_lr_);
  if (!state_.position.empty())
    adam_step(state_.position, res.grads.position, state_.position_opt, last_lr_);

  ema_update(state_.target, state_.context, cfg_.momentum);
  state_.epoch = epoch + 1;
  return res.loss;
}

std::string metrics_line(int epoch, const LossBreakdown& loss, double lr) {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["joint"] = loss.joint;
  j["semantic"] = loss.semantic;
  j["total"] = loss.total;
  j["lr"] = lr;
  return j.dump();
}

TrainReport train(const CsrGraph& g, const RunConfig& cfg, const TrainOutputs& out) {
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(g, cfg);
  TrainReport report;

  std::ofstream metrics;
  if (!out.metrics.empty()) {
    metrics.open(out.metrics, std::ios::binary | std::ios::trunc);
    if (!metrics) fail(Errc::io_error, "cannot write metrics file " + out.metrics.string());
  }

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    LossBreakdown loss = trainer.train_epoch(epoch);
    report.learning_rates.push_back(trainer.last_lr());
    if (metrics) metrics << metrics_line(epoch, loss, trainer.last_lr()) << '\n' << std::flush;
    const double total = loss.total;
    report.epochs.push_back(std::move(loss));
    if (total < best - cfg.min_delta) {
      best = total;
      report.best_epoch = epoch;
      report.best_state = trainer.state();
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      report.early_stopped = true;
      break;
    }
  }
  report.best_loss = best;
  report.final_state = trainer.state();
  if (!out.checkpoint.empty()) {
    save_checkpoint(out.checkpoint, report.best_state, cfg);
    report.checkpoint = out.checkpoint;
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

DenseMatrix embed(const CsrGraph& g, const EncoderState& state) {
  if (state.context.empty()) fail(Errc::checkpoint_mismatch, "encoder state has no layers");
  if (g.feature_dim() != state.input_dim())
    fail(Errc::checkpoint_mismatch, "checkpoint expects " + std::to_string(state.input_dim()) +
                                        " input features, graph has " +
                                        std::to_string(g.feature_dim()));
  return encode(state.context, build_normalized_adjacency(g), g.features());
}

}  // namespace gjepa
