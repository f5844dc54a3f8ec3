#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gjepa/error.hpp"
#include "gjepa/graph.hpp"
#include "gjepa/random.hpp"

// Stochastic masking. Samplers are templates over the bit generator so tests
// can drive them with a forced generator; production code passes an Rng from
// make_stream().
namespace gjepa {

inline constexpr int kMaxResamples = 16;

enum class MaskKind { context_drop, target_mask, distortion };

/// Which nodes a sampler selected. For context_drop the ids are the dropped
/// nodes, for target_mask the masked nodes, for distortion the replaced rows.
struct MaskSet {
  MaskKind kind = MaskKind::context_drop;
  std::vector<NodeId> node_ids;
  double probability = 0.0;
};

struct ContextSample {
  Subgraph sub;  // induced subgraph on the survivors
  MaskSet dropped;
  const std::vector<NodeId>& kept() const noexcept { return sub.new_to_old; }
};

struct TargetMask {
  std::vector<NodeId> masked;
  std::vector<NodeId> active;  // complement of masked, ascending
};

struct Distortion {
  CsrGraph graph;
  MaskSet replaced;
};

namespace detail {
inline void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0))
    fail(Errc::invalid_argument, std::string(what) + " must lie in (0, 1)");
}
}  // namespace detail

/// Drops every node independently with probability p1 and returns the induced
/// subgraph of the survivors, redrawing when nothing survives.
template <class Gen>
ContextSample sample_context(const CsrGraph& g, double p1, Gen& gen) {
  detail::check_probability(p1, "p1");
  const std::size_t n = g.n_nodes();
  if (n == 0) fail(Errc::degenerate_sampling_configuration, "empty graph");
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    std::vector<NodeId> kept;
    MaskSet dropped{MaskKind::context_drop, {}, p1};
    for (std::size_t u = 0; u < n; ++u) {
      if (uniform01(gen) < p1)
        dropped.node_ids.push_back(static_cast<NodeId>(u));
      else
        kept.push_back(static_cast<NodeId>(u));
    }
    if (!kept.empty()) return ContextSample{induced_subgraph(g, kept), std::move(dropped)};
  }
  fail(Errc::degenerate_sampling_configuration,
       "context sample empty " + std::to_string(kMaxResamples) + " times in a row");
}

/// t independent Bernoulli(p2) masks over `nodes` nodes; each active set is
/// guaranteed nonempty.
template <class Gen>
std::vector<TargetMask> sample_target_masks(std::size_t nodes, double p2, std::size_t t,
                                            Gen& gen) {
  detail::check_probability(p2, "p2");
  if (t == 0) fail(Errc::invalid_argument, "need at least one target");
  if (nodes == 0) fail(Errc::degenerate_sampling_configuration, "no nodes to mask");
  std::vector<TargetMask> masks;
  masks.reserve(t);
  for (std::size_t k = 0; k < t; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxResamples && !ok; ++attempt) {
      TargetMask m;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (uniform01(gen) < p2)
          m.masked.push_back(static_cast<NodeId>(u));
        else
          m.active.push_back(static_cast<NodeId>(u));
      }
      if (!m.active.empty()) {
        masks.push_back(std::move(m));
        ok = true;
      }
    }
    if (!ok)
      fail(Errc::degenerate_sampling_configuration,
           "target mask empty " + std::to_string(kMaxResamples) + " times in a row");
  }
  return masks;
}

/// Number of rows replaced at ratio p among `count` candidates: floor(p*count),
/// with a small guard so that e.g. 0.29*100 counts as 29.
inline std::size_t distortion_count(double p, std::size_t count) {
  return static_cast<std::size_t>(std::floor(p * static_cast<double>(count) + 1e-9));
}

/// Replaces the feature rows of floor(p*|test_ids|) test nodes, chosen
/// uniformly without replacement, by i.i.d. N(0,1) draws.
template <class Gen>
Distortion distort_features(const CsrGraph& g, double p, std::span<const NodeId> test_ids,
                            Gen& gen) {
  if (!(p >= 0.0 && p <= 1.0)) fail(Errc::invalid_argument, "distortion ratio must lie in [0, 1]");
  if (test_ids.empty()) fail(Errc::invalid_argument, "empty test set");
  for (NodeId v : test_ids)
    if (v < 0 || static_cast<std::size_t>(v) >= g.n_nodes())
      fail(Errc::index_out_of_range, "test id " + std::to_string(v));

  std::vector<NodeId> pool(test_ids.begin(), test_ids.end());
  const std::size_t count = distortion_count(p, pool.size());
  for (std::size_t i = 0; i < count; ++i)
    std::swap(pool[i], pool[i + uniform_index(gen, pool.size() - i)]);
  pool.resize(count);

  DenseMatrix features = g.features();
  for (NodeId v : pool)
    for (double& x : features.row(static_cast<std::size_t>(v))) x = standard_normal(gen);
  return Distortion{g.with_features(std::move(features)),
                    MaskSet{MaskKind::distortion, std::move(pool), p}};
}

}  // namespace gjepa
