#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "gjepa/dense_matrix.hpp"
#include "gjepa/graph.hpp"
#include "gjepa/random.hpp"

namespace gjepa {

enum class Activation { identity, relu, tanh };

std::string_view activation_name(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// One graph convolution: out = g(adj * x * W). No bias.
struct GcnLayer {
  DenseMatrix weight;  // d_in x d_out
  Activation activation = Activation::identity;

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }

  friend bool operator==(const GcnLayer&, const GcnLayer&) = default;
};

/// Standard normal entries scaled by sqrt(2/d_in) for ReLU layers and
/// 1/sqrt(d_in) otherwise.
GcnLayer make_gcn_layer(std::size_t d_in, std::size_t d_out, Activation act, Rng& rng);

/// Forward tape. Holds a pointer to the adjacency, which must outlive it.
struct GcnCache {
  const NormalizedAdjacency* adj = nullptr;
  DenseMatrix input;
  DenseMatrix pre;  // adj * x * W
  DenseMatrix out;  // g(pre)
  Activation activation = Activation::identity;
};

struct GcnForward {
  DenseMatrix out;
  GcnCache cache;
};

struct GcnGradients {
  DenseMatrix grad_x;  // empty when not requested
  DenseMatrix grad_weight;
};

GcnForward gcn_forward(const GcnLayer& layer, const NormalizedAdjacency& adj,
                       const DenseMatrix& x);

/// Output only, no tape.
DenseMatrix gcn_apply(const GcnLayer& layer, const NormalizedAdjacency& adj, const DenseMatrix& x);

/// Gradients of a scalar loss given dL/d(out). The adjacency is symmetric, so
/// adj^T is adj itself.
GcnGradients gcn_backward(const GcnLayer& layer, const GcnCache& cache,
                          const DenseMatrix& grad_out, bool need_grad_x = true);

void apply_activation(Activation act, DenseMatrix& m);

/// (1/|active|) * sum of the active rows. Throws Errc::degenerate_mask when
/// `active` is empty.
std::vector<double> global_mean_pool(const DenseMatrix& x, std::span<const NodeId> active);

/// Adds grad / |active| into the active rows of `grad_x`.
void global_mean_pool_backward(std::span<const double> grad, std::span<const NodeId> active,
                               DenseMatrix& grad_x);

std::vector<NodeId> all_nodes(std::size_t n);

}  // namespace gjepa
