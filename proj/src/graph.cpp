#include "gjepa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gjepa/error.hpp"

namespace gjepa {

CsrGraph::CsrGraph(std::vector<std::int64_t> row_offsets, std::vector<NodeId> col_indices,
                   DenseMatrix features, std::optional<std::vector<int>> labels)
    : row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  require(!row_offsets_.empty() && row_offsets_.front() == 0, Errc::invalid_argument,
          "row_offsets must start at 0");
  const std::size_t n = n_nodes();
  require(static_cast<std::size_t>(row_offsets_.back()) == col_indices_.size(),
          Errc::invalid_argument, "row_offsets[n] != n_edges");
  require(features_.rows() == n, Errc::dimension_mismatch, "feature rows != n_nodes");
  if (labels_) require(labels_->size() == n, Errc::dimension_mismatch, "labels length != n_nodes");

  for (std::size_t u = 0; u < n; ++u) {
    require(row_offsets_[u] <= row_offsets_[u + 1], Errc::invalid_argument,
            "row_offsets must be nondecreasing");
    auto nb = neighbors(u);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const NodeId v = nb[i];
      if (v < 0 || static_cast<std::size_t>(v) >= n)
        fail(Errc::index_out_of_range, "column index " + std::to_string(v));
      require(static_cast<std::size_t>(v) != u, Errc::invalid_argument, "stored self-loop");
      require(i == 0 || nb[i - 1] < v, Errc::invalid_argument,
              "row not strictly sorted (duplicate arc?)");
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (NodeId v : neighbors(u)) {
      auto back = neighbors(static_cast<std::size_t>(v));
      require(std::binary_search(back.begin(), back.end(), static_cast<NodeId>(u)),
              Errc::invalid_argument, "adjacency not symmetric");
    }
  }
}

CsrGraph CsrGraph::from_edges(std::size_t n_nodes, std::span<const Edge> edges,
                              DenseMatrix features, std::optional<std::vector<int>> labels) {
  std::vector<std::vector<NodeId>> adj(n_nodes);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n_nodes ||
        static_cast<std::size_t>(e.v) >= n_nodes) {
      fail(Errc::index_out_of_range,
           "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")");
    }
    if (e.u == e.v) continue;
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  std::vector<std::int64_t> offsets(n_nodes + 1, 0);
  std::vector<NodeId> cols;
  for (std::size_t u = 0; u < n_nodes; ++u) {
    auto& row = adj[u];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets[u + 1] = static_cast<std::int64_t>(cols.size());
  }
  return CsrGraph(std::move(offsets), std::move(cols), std::move(features), std::move(labels));
}

std::vector<Edge> CsrGraph::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(n_edges() / 2);
  for (std::size_t u = 0; u < n_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (static_cast<std::size_t>(v) > u) out.push_back({static_cast<NodeId>(u), v});
  return out;
}

CsrGraph CsrGraph::with_features(DenseMatrix features) const {
  require(features.same_shape(features_), Errc::dimension_mismatch, "with_features shape");
  CsrGraph g = *this;
  g.features_ = std::move(features);
  return g;
}

DenseMatrix NormalizedAdjacency::to_dense() const {
  const std::size_t n = n_nodes();
  DenseMatrix d(n, n);
  for (std::size_t u = 0; u < n; ++u)
    for (auto i = row_offsets[u]; i < row_offsets[u + 1]; ++i)
      d(u, static_cast<std::size_t>(col_indices[static_cast<std::size_t>(i)])) =
          values[static_cast<std::size_t>(i)];
  return d;
}

NormalizedAdjacency build_normalized_adjacency(const CsrGraph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t u = 0; u < n; ++u)
    inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));

  NormalizedAdjacency adj;
  adj.row_offsets.assign(n + 1, 0);
  adj.col_indices.reserve(g.n_edges() + n);
  adj.values.reserve(g.n_edges() + n);
  for (std::size_t u = 0; u < n; ++u) {
    bool diag_done = false;
    auto emit = [&](std::size_t v) {
      adj.col_indices.push_back(static_cast<NodeId>(v));
      adj.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
    };
    for (NodeId v : g.neighbors(u)) {
      if (!diag_done && static_cast<std::size_t>(v) > u) {
        emit(u);
        diag_done = true;
      }
      emit(static_cast<std::size_t>(v));
    }
    if (!diag_done) emit(u);
    adj.row_offsets[u + 1] = static_cast<std::int64_t>(adj.values.size());
  }
  return adj;
}

Subgraph induced_subgraph(const CsrGraph& g, std::span<const NodeId> keep) {
  if (keep.empty()) fail(Errc::degenerate_sample, "empty keep set");
  const std::size_t n = g.n_nodes();
  Subgraph sub;
  sub.old_to_new.assign(n, -1);
  for (NodeId v : keep) {
    if (v < 0 || static_cast<std::size_t>(v) >= n)
      fail(Errc::index_out_of_range, "keep index " + std::to_string(v));
    sub.old_to_new[static_cast<std::size_t>(v)] = 0;
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (sub.old_to_new[u] >= 0) {
      sub.old_to_new[u] = static_cast<NodeId>(sub.new_to_old.size());
      sub.new_to_old.push_back(static_cast<NodeId>(u));
    }
  }

  const std::size_t m = sub.new_to_old.size();
  const std::size_t d = g.feature_dim();
  std::vector<std::int64_t> offsets(m + 1, 0);
  std::vector<NodeId> cols;
  DenseMatrix features(m, d);
  std::optional<std::vector<int>> labels;
  if (g.has_labels()) labels.emplace(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto old = static_cast<std::size_t>(sub.new_to_old[i]);
    for (NodeId v : g.neighbors(old)) {
      const NodeId nv = sub.old_to_new[static_cast<std::size_t>(v)];
      if (nv >= 0) cols.push_back(nv);
    }
    offsets[i + 1] = static_cast<std::int64_t>(cols.size());
    std::copy_n(g.features().row(old).begin(), d, features.row(i).begin());
    if (labels) (*labels)[i] = (*g.labels())[old];
  }
  sub.graph = CsrGraph(std::move(offsets), std::move(cols), std::move(features), std::move(labels));
  return sub;
}

}  // namespace gjepa
