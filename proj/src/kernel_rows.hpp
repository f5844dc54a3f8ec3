#pragma once

// Per-row inner kernels shared by the serial and OpenMP drivers.

#include <cstddef>
#include <cstdint>

#include "gjepa/dense_matrix.hpp"
#include "gjepa/error.hpp"
#include "gjepa/graph.hpp"

namespace gjepa::kernels::detail {

inline void check_spmm(const NormalizedAdjacency& adj, const DenseMatrix& x) {
  if (adj.n_nodes() != x.rows())
    fail(Errc::dimension_mismatch, "spmm: adjacency has " + std::to_string(adj.n_nodes()) +
                                       " nodes, x has " + std::to_string(x.rows()) + " rows");
}

inline void check_matmul(std::size_t inner_a, std::size_t inner_b, const char* what) {
  if (inner_a != inner_b) fail(Errc::dimension_mismatch, what);
}

// out[i,:] = sum_j adj[i,j] * x[j,:], neighbors in CSR order.
inline void spmm_row(const NormalizedAdjacency& adj, const DenseMatrix& x, DenseMatrix& out,
                     std::size_t i) {
  const std::size_t d = x.cols();
  double* __restrict o = out.data() + i * d;
  for (auto p = adj.row_offsets[i]; p < adj.row_offsets[i + 1]; ++p) {
    const double w = adj.values[static_cast<std::size_t>(p)];
    const double* __restrict xr =
        x.data() + static_cast<std::size_t>(adj.col_indices[static_cast<std::size_t>(p)]) * d;
    for (std::size_t c = 0; c < d; ++c) o[c] += w * xr[c];
  }
}

// out[i,:] = sum_p a[i,p] * b[p,:]
inline void matmul_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                       std::size_t i) {
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  double* __restrict o = out.data() + i * m;
  const double* ar = a.data() + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = ar[p];
    if (av == 0.0) continue;
    const double* __restrict br = b.data() + p * m;
    for (std::size_t c = 0; c < m; ++c) o[c] += av * br[c];
  }
}

}  // namespace gjepa::kernels::detail
