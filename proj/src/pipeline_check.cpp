#include "gjepa/pipeline_check.hpp"

#include <chrono>

#include "gjepa/trainer.hpp"

namespace gjepa {

PipelineCheckResult check_pipeline_gradients(const CsrGraph& g, const RunConfig& cfg,
                                             const PipelineCheckOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  EncoderState state;
  if (options.warmup_epochs > 0) {
    Trainer trainer(g, cfg);
    for (int e = 0; e < options.warmup_epochs; ++e) trainer.train_epoch(e);
    state = trainer.state();
  } else {
    state = init_encoder_state(g.feature_dim(), cfg);
    Rng rng = make_stream(cfg.seed, Stream::init, 1);
    for (double& x : state.position.values()) x = options.position_scale * standard_normal(rng);
  }
  const int epoch = options.warmup_epochs;

  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const EpochSample sample = draw_epoch_sample(g, cfg, epoch);

  std::optional<PseudoLabelPair> labels = options.labels;
  if (cfg.semantic && !labels) {
    const PipelineResult probe = compute_objective(state, g, adj, sample, {}, cfg.beta, false);
    Rng crng = make_stream(cfg.seed, Stream::cluster, static_cast<std::uint64_t>(epoch));
    GmmOptions gopt;
    gopt.k = resolve_cluster_count(g, cfg);
    gopt.max_iter = cfg.gmm_max_iter;
    gopt.tol = cfg.gmm_tol;
    gopt.covariance = cfg.covariance;
    gopt.kmeans_iter = cfg.kmeans_iter;
    GmmFit fit = fit_gmm(probe.context_embeddings, gopt, crng);
    KMeansResult km = fit_kmeans(probe.context_embeddings, gopt.k, cfg.kmeans_iter, crng);
    labels = PseudoLabelPair{fit.labels, align_labels(fit.labels, km.labels)};
  }
  LabelProvider provider;
  if (cfg.semantic) provider = [&labels](const DenseMatrix&) { return labels; };

  const PipelineResult analytic = compute_objective(state, g, adj, sample, provider, cfg.beta, true);

  std::vector<GradCheckParam> params;
  for (std::size_t l = 0; l < state.context.size(); ++l)
    params.push_back({"context." + std::to_string(l), &state.context[l].weight,
                      &analytic.grads.context[l]});
  if (!state.position.empty())
    params.push_back({"position", &state.position, &analytic.grads.position});
  for (std::size_t k = 0; k < state.predictors.size(); ++k)
    for (std::size_t l = 0; l < state.predictors[k].size(); ++l)
      params.push_back({"predictor." + std::to_string(k) + "." + std::to_string(l),
                        &state.predictors[k][l].weight, &analytic.grads.predictors[k][l]});

  auto loss = [&] {
    return compute_objective(state, g, adj, sample, provider, cfg.beta, false).total_extended;
  };
  PipelineCheckResult out;
  out.report = grad_check(loss, params, options.tolerance, options.grad);
  out.loss = analytic.loss;
  out.semantic_active = analytic.semantic_active;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace gjepa
