#include "gjepa/nn.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "gjepa/error.hpp"
#include "gjepa/kernels.hpp"

namespace gjepa {

std::string_view activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  fail(Errc::invalid_argument, "unknown activation '" + std::string(name) + "'");
}

GcnLayer make_gcn_layer(std::size_t d_in, std::size_t d_out, Activation act, Rng& rng) {
  GcnLayer layer{DenseMatrix(d_in, d_out), act};
  const double gain = act == Activation::relu ? 2.0 : 1.0;
  const double scale = std::sqrt(gain / static_cast<double>(d_in));
  for (double& w : layer.weight.values()) w = scale * standard_normal(rng);
  return layer;
}

void apply_activation(Activation act, DenseMatrix& m) {
  switch (act) {
    case Activation::identity: break;
    case Activation::relu:
      for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (double& v : m.values()) v = std::tanh(v);
      break;
  }
}

namespace {

void check_forward(const GcnLayer& layer, const NormalizedAdjacency& adj, const DenseMatrix& x) {
  if (x.cols() != layer.in_dim())
    fail(Errc::dimension_mismatch, "gcn: input has " + std::to_string(x.cols()) +
                                       " features, layer expects " +
                                       std::to_string(layer.in_dim()));
  if (x.rows() != adj.n_nodes())
    fail(Errc::dimension_mismatch, "gcn: input rows != adjacency nodes");
}

// Propagate through the narrower side first: adj*(x*W) when the layer shrinks
// the width, (adj*x)*W otherwise.
DenseMatrix propagate(const GcnLayer& layer, const NormalizedAdjacency& adj, const DenseMatrix& x) {
  if (layer.in_dim() > layer.out_dim())
    return kernels::spmm(adj, kernels::matmul(x, layer.weight));
  return kernels::matmul(kernels::spmm(adj, x), layer.weight);
}

}  // namespace

GcnForward gcn_forward(const GcnLayer& layer, const NormalizedAdjacency& adj,
                       const DenseMatrix& x) {
  check_forward(layer, adj, x);
  GcnForward f;
  f.cache.adj = &adj;
  f.cache.input = x;
  f.cache.activation = layer.activation;
  f.cache.pre = propagate(layer, adj, x);
  f.out = f.cache.pre;
  apply_activation(layer.activation, f.out);
  f.cache.out = f.out;
  return f;
}

DenseMatrix gcn_apply(const GcnLayer& layer, const NormalizedAdjacency& adj, const DenseMatrix& x) {
  check_forward(layer, adj, x);
  DenseMatrix out = propagate(layer, adj, x);
  apply_activation(layer.activation, out);
  return out;
}

GcnGradients gcn_backward(const GcnLayer& layer, const GcnCache& cache,
                          const DenseMatrix& grad_out, bool need_grad_x) {
  if (cache.adj == nullptr) fail(Errc::invalid_argument, "gcn_backward: empty cache");
  if (!grad_out.same_shape(cache.out))
    fail(Errc::dimension_mismatch, "gcn_backward: grad_out shape != forward output shape");
  if (cache.input.cols() != layer.in_dim() || cache.out.cols() != layer.out_dim())
    fail(Errc::dimension_mismatch, "gcn_backward: cache does not match layer");

  // delta = grad_out * g'(pre)
  DenseMatrix delta = grad_out;
  switch (cache.activation) {
    case Activation::identity: break;
    case Activation::relu:
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (!(cache.pre.data()[i] > 0.0)) delta.data()[i] = 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double y = cache.out.data()[i];
        delta.data()[i] *= 1.0 - y * y;
      }
      break;
  }

  // (adj x)^T delta == x^T (adj delta) since adj is symmetric.
  const DenseMatrix adj_delta = kernels::spmm(*cache.adj, delta);
  GcnGradients g;
  g.grad_weight = kernels::matmul_tn(cache.input, adj_delta);
  if (need_grad_x) g.grad_x = kernels::matmul_nt(adj_delta, layer.weight);
  return g;
}

std::vector<double> global_mean_pool(const DenseMatrix& x, std::span<const NodeId> active) {
  if (active.empty()) fail(Errc::degenerate_mask, "global_mean_pool over empty active set");
  std::vector<double> r(x.cols(), 0.0);
  for (NodeId n : active) {
    if (n < 0 || static_cast<std::size_t>(n) >= x.rows())
      fail(Errc::index_out_of_range, "pool index " + std::to_string(n));
    auto row = x.row(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < r.size(); ++c) r[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(active.size());
  for (double& v : r) v *= inv;
  return r;
}

void global_mean_pool_backward(std::span<const double> grad, std::span<const NodeId> active,
                               DenseMatrix& grad_x) {
  if (active.empty()) fail(Errc::degenerate_mask, "global_mean_pool over empty active set");
  if (grad.size() != grad_x.cols()) fail(Errc::dimension_mismatch, "pool backward width");
  const double inv = 1.0 / static_cast<double>(active.size());
  for (NodeId n : active) {
    auto row = grad_x.row(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += grad[c] * inv;
  }
}

std::vector<NodeId> all_nodes(std::size_t n) {
  std::vector<NodeId> v(n);
  std::iota(v.begin(), v.end(), NodeId{0});
  return v;
}

}  // namespace gjepa
