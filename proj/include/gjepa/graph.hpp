#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gjepa/dense_matrix.hpp"

namespace gjepa {

using NodeId = std::int32_t;

struct Edge {
  NodeId u;
  NodeId v;
};

/// Immutable undirected simple graph in CSR form with per-node features.
///
/// Invariants (checked on construction): offsets nondecreasing and ending at
/// n_edges, every column < n_nodes, rows sorted and free of duplicates, no
/// stored self-loops, and arc (u,v) present iff (v,u) present. n_edges counts
/// directed arcs, so an undirected edge contributes two.
class CsrGraph {
 public:
  CsrGraph() = default;
  CsrGraph(std::vector<std::int64_t> row_offsets, std::vector<NodeId> col_indices,
           DenseMatrix features, std::optional<std::vector<int>> labels = std::nullopt);

  /// Symmetrizes, deduplicates and drops self-loops from an arbitrary edge list.
  static CsrGraph from_edges(std::size_t n_nodes, std::span<const Edge> edges,
                             DenseMatrix features,
                             std::optional<std::vector<int>> labels = std::nullopt);

  std::size_t n_nodes() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t n_edges() const noexcept { return col_indices_.size(); }
  std::size_t feature_dim() const noexcept { return features_.cols(); }

  std::span<const std::int64_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  std::span<const NodeId> neighbors(std::size_t u) const noexcept {
    return {col_indices_.data() + row_offsets_[u],
            static_cast<std::size_t>(row_offsets_[u + 1] - row_offsets_[u])};
  }
  std::size_t degree(std::size_t u) const noexcept {
    return static_cast<std::size_t>(row_offsets_[u + 1] - row_offsets_[u]);
  }

  const DenseMatrix& features() const noexcept { return features_; }
  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }

  /// Undirected edge list with u < v, in CSR order.
  std::vector<Edge> undirected_edges() const;

  /// Same topology and labels, different feature matrix (same shape).
  CsrGraph with_features(DenseMatrix features) const;

  friend bool operator==(const CsrGraph&, const CsrGraph&) = default;

 private:
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  DenseMatrix features_;
  std::optional<std::vector<int>> labels_;
};

/// D^-1/2 (A + I) D^-1/2 in CSR form with the self-loop arcs materialized.
/// Columns within each row are sorted, diagonal included.
struct NormalizedAdjacency {
  std::vector<std::int64_t> row_offsets{0};
  std::vector<NodeId> col_indices;
  std::vector<double> values;

  std::size_t n_nodes() const noexcept { return row_offsets.size() - 1; }
  std::size_t nnz() const noexcept { return values.size(); }
  DenseMatrix to_dense() const;
};

NormalizedAdjacency build_normalized_adjacency(const CsrGraph& g);

struct Subgraph {
  CsrGraph graph;
  std::vector<NodeId> new_to_old;  // kept nodes in ascending order
  std::vector<NodeId> old_to_new;  // -1 for dropped nodes
};

/// Induced subgraph on `keep` (any order, duplicates ignored). Throws
/// Errc::degenerate_sample when `keep` is empty.
Subgraph induced_subgraph(const CsrGraph& g, std::span<const NodeId> keep);

}  // namespace gjepa
