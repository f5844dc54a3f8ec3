#include "gjepa/model.hpp"

#include <cmath>
#include <string>

#include "gjepa/error.hpp"
#include "gjepa/kernels.hpp"

namespace gjepa {

std::vector<GcnLayer> make_encoder(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                   Rng& rng) {
  std::vector<GcnLayer> layers;
  std::size_t d = in_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const Activation act = i + 1 == hidden.size() ? Activation::tanh : Activation::relu;
    layers.push_back(make_gcn_layer(d, hidden[i], act, rng));
    d = hidden[i];
  }
  return layers;
}

EncoderState init_encoder_state(std::size_t in_dim, const RunConfig& cfg) {
  cfg.validate();
  if (in_dim == 0) fail(Errc::invalid_argument, "input feature dimension must be positive");
  Rng rng = make_stream(cfg.seed, Stream::init);
  EncoderState s;
  s.seed = cfg.seed;
  s.position_mode = cfg.position;
  s.context = make_encoder(in_dim, cfg.hidden, rng);
  s.target = cfg.target_init == TargetInit::copy ? s.context : make_encoder(in_dim, cfg.hidden, rng);
  for (const auto& l : s.context) s.context_opt.push_back(AdamState::for_param(l.weight));

  const std::size_t dim = cfg.embedding_dim();
  for (std::size_t k = 0; k < cfg.targets; ++k) {
    std::vector<GcnLayer> pred;
    pred.push_back(make_gcn_layer(dim, dim, Activation::tanh, rng));
    pred.push_back(make_gcn_layer(dim, dim, Activation::tanh, rng));
    std::vector<AdamState> opt;
    for (const auto& l : pred) opt.push_back(AdamState::for_param(l.weight));
    s.predictors.push_back(std::move(pred));
    s.predictor_opt.push_back(std::move(opt));
  }
  switch (cfg.position) {
    case PositionMode::shared: s.position = DenseMatrix(1, dim); break;
    case PositionMode::per_target: s.position = DenseMatrix(cfg.targets, dim); break;
    case PositionMode::sinusoidal:
    case PositionMode::none: break;
  }
  s.position_opt = AdamState::for_param(s.position);
  return s;
}

void ema_update(std::vector<GcnLayer>& target, const std::vector<GcnLayer>& context, double m) {
  if (!(m >= 0.0 && m <= 1.0)) fail(Errc::invalid_argument, "momentum must lie in [0, 1]");
  if (target.size() != context.size())
    fail(Errc::dimension_mismatch, "ema_update: encoders differ in depth");
  for (std::size_t l = 0; l < target.size(); ++l)
    if (!target[l].weight.same_shape(context[l].weight))
      fail(Errc::dimension_mismatch, "ema_update: layer " + std::to_string(l) + " shapes differ");
  const double one_minus = 1.0 - m;
  for (std::size_t l = 0; l < target.size(); ++l) {
    double* t = target[l].weight.data();
    const double* c = context[l].weight.data();
    for (std::size_t i = 0; i < target[l].weight.size(); ++i) t[i] = std::fma(m, t[i], one_minus * c[i]);
  }
}

DenseMatrix inject_target_position(const DenseMatrix& h_ctx, std::span<const NodeId> target_active,
                                   std::span<const NodeId> context_kept,
                                   std::span<const double> proj) {
  if (proj.size() != h_ctx.cols())
    fail(Errc::dimension_mismatch, "position vector width != embedding width");
  std::vector<bool> kept(h_ctx.rows(), false);
  for (NodeId v : context_kept) kept[static_cast<std::size_t>(v)] = true;
  DenseMatrix out = h_ctx;
  for (NodeId v : target_active) {
    const auto n = static_cast<std::size_t>(v);
    if (!kept[n]) continue;
    auto row = out.row(n);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += proj[c];
  }
  return out;
}

std::vector<double> sinusoidal_code(NodeId node, std::size_t dim) {
  std::vector<double> code(dim);
  const double pos = static_cast<double>(node);
  for (std::size_t c = 0; c < dim; ++c) {
    const double pair = static_cast<double>(c - c % 2);
    const double angle = pos / std::pow(10000.0, pair / static_cast<double>(dim));
    code[c] = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
  }
  return code;
}

EpochSample draw_epoch_sample(const CsrGraph& g, const RunConfig& cfg, int epoch) {
  Rng ctx_rng = make_stream(cfg.seed, Stream::context, static_cast<std::uint64_t>(epoch));
  Rng tgt_rng = make_stream(cfg.seed, Stream::target, static_cast<std::uint64_t>(epoch));
  EpochSample s;
  s.context = sample_context(g, cfg.p1, ctx_rng);
  s.context_adj = build_normalized_adjacency(s.context.sub.graph);
  s.targets = sample_target_masks(g.n_nodes(), cfg.p2, cfg.targets, tgt_rng);
  return s;
}

DenseMatrix encode(const std::vector<GcnLayer>& encoder, const NormalizedAdjacency& adj,
                   const DenseMatrix& features) {
  DenseMatrix h = features;
  for (const auto& layer : encoder) h = gcn_apply(layer, adj, h);
  return h;
}

PipelineResult compute_objective(const EncoderState& state, const CsrGraph& g,
                                 const NormalizedAdjacency& full_adj, const EpochSample& sample,
                                 const LabelProvider& labels, double beta, bool need_grads) {
  const std::size_t n = g.n_nodes();
  const std::size_t t = state.n_targets();
  const std::size_t dim = state.embedding_dim();
  if (sample.targets.size() != t)
    fail(Errc::dimension_mismatch, "sample has " + std::to_string(sample.targets.size()) +
                                       " targets, model has " + std::to_string(t));
  if (g.feature_dim() != state.input_dim())
    fail(Errc::dimension_mismatch, "graph features do not match encoder input width");

  PipelineResult res;
  const auto& kept = sample.context.kept();

  // context encoder on G'
  std::vector<GcnCache> ctx_caches;
  {
    DenseMatrix h = sample.context.sub.graph.features();
    for (const auto& layer : state.context) {
      GcnForward f = gcn_forward(layer, sample.context_adj, h);
      h = std::move(f.out);
      ctx_caches.push_back(std::move(f.cache));
    }
    res.context_embeddings = std::move(h);
  }
  const DenseMatrix& h_ctx = res.context_embeddings;

  // target encoder on G, pooled per target; constants for differentiation
  const DenseMatrix h_tgt = encode(state.target, full_adj, g.features());
  res.target_pooled = DenseMatrix(t, dim);
  for (std::size_t k = 0; k < t; ++k) {
    const auto pooled = global_mean_pool(h_tgt, sample.targets[k].active);
    std::copy(pooled.begin(), pooled.end(), res.target_pooled.row(k).begin());
  }

  // H' scattered back to full-graph rows; dropped nodes stay zero
  DenseMatrix h_full(n, dim);
  std::vector<bool> is_kept(n, false);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto v = static_cast<std::size_t>(kept[i]);
    is_kept[v] = true;
    std::copy_n(h_ctx.row(i).begin(), dim, h_full.row(v).begin());
  }

  res.predicted_pooled = DenseMatrix(t, dim);
  res.loss.per_target.assign(t, 0.0);
  DenseMatrix grad_full;
  if (need_grads) {
    grad_full = DenseMatrix(n, dim);
    res.grads.predictors.resize(t);
    res.grads.position = DenseMatrix(state.position.rows(), state.position.cols());
  }
  const double inv_t = 1.0 / static_cast<double>(t);
  long double joint = 0.0L;

  // Targets are independent given H', so each is run forward and backward in
  // turn; only one predictor tape is alive at a time.
  for (std::size_t k = 0; k < t; ++k) {
    const auto& active = sample.targets[k].active;
    DenseMatrix conditioned;
    switch (state.position_mode) {
      case PositionMode::shared:
      case PositionMode::per_target:
        conditioned = inject_target_position(
            h_full, active, kept,
            state.position.row(state.position_mode == PositionMode::shared ? 0 : k));
        break;
      case PositionMode::sinusoidal:
        conditioned = h_full;
        for (NodeId v : active) {
          const auto node = static_cast<std::size_t>(v);
          if (!is_kept[node]) continue;
          const auto code = sinusoidal_code(v, dim);
          auto row = conditioned.row(node);
          for (std::size_t c = 0; c < dim; ++c) row[c] += code[c];
        }
        break;
      case PositionMode::none: conditioned = h_full; break;
    }
    const auto& pred = state.predictors[k];
    GcnForward f1 = gcn_forward(pred[0], full_adj, conditioned);
    GcnForward f2 = gcn_forward(pred[1], full_adj, f1.out);
    const auto pooled = global_mean_pool(f2.out, active);
    std::copy(pooled.begin(), pooled.end(), res.predicted_pooled.row(k).begin());

    long double sq = 0.0L;
    std::vector<double> dpool(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const double e = pooled[c] - res.target_pooled(k, c);
      sq += e * e;
      dpool[c] = 2.0 * inv_t * e;
    }
    res.loss.per_target[k] = static_cast<double>(sq);
    joint += sq;

    if (!need_grads) continue;
    DenseMatrix d_out(n, dim);
    global_mean_pool_backward(dpool, active, d_out);
    GcnGradients g2 = gcn_backward(pred[1], f2.cache, d_out);
    GcnGradients g1 = gcn_backward(pred[0], f1.cache, g2.grad_x);
    res.grads.predictors[k] = {std::move(g1.grad_weight), std::move(g2.grad_weight)};
    if (state.position_mode == PositionMode::shared ||
        state.position_mode == PositionMode::per_target) {
      auto gpos = res.grads.position.row(state.position_mode == PositionMode::shared ? 0 : k);
      for (NodeId v : active) {
        const auto node = static_cast<std::size_t>(v);
        if (!is_kept[node]) continue;
        auto grow = g1.grad_x.row(node);
        for (std::size_t c = 0; c < dim; ++c) gpos[c] += grow[c];
      }
    }
    grad_full += g1.grad_x;
  }
  joint *= inv_t;

  double semantic = 0.0;
  DenseMatrix grad_ctx;
  if (need_grads) {
    grad_ctx = DenseMatrix(kept.size(), dim);
    for (std::size_t i = 0; i < kept.size(); ++i)
      std::copy_n(grad_full.row(static_cast<std::size_t>(kept[i])).begin(), dim,
                  grad_ctx.row(i).begin());
  }
  if (labels) {
    if (auto pl = labels(h_ctx)) {
      SemanticLoss sem = semantic_loss(pl->gmm, pl->kmeans, h_ctx, beta);
      semantic = sem.value;
      res.semantic_active = true;
      if (need_grads) grad_ctx += sem.grad;
    }
  }
  res.loss = total_loss(static_cast<double>(joint), semantic, std::move(res.loss.per_target));
  res.total_extended = joint + semantic;

  if (need_grads) {
    res.grads.context.resize(state.context.size());
    DenseMatrix d = std::move(grad_ctx);
    for (std::size_t l = state.context.size(); l-- > 0;) {
      GcnGradients gl = gcn_backward(state.context[l], ctx_caches[l], d, l > 0);
      res.grads.context[l] = std::move(gl.grad_weight);
      d = std::move(gl.grad_x);
    }
  }
  return res;
}

}  // namespace gjepa
