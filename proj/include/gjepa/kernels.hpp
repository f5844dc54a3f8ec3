#pragma once

#include "gjepa/dense_matrix.hpp"
#include "gjepa/graph.hpp"

// Dense and sparse products used by every GCN pass.
//
// gjepa::kernels holds the OpenMP drivers; gjepa::kernels::serial holds the
// single-threaded reference versions kept for testing and benchmarking. Both
// share the same per-row inner kernels, so every output row is accumulated in
// the same order and the two variants agree bit-for-bit regardless of the
// thread count.
namespace gjepa::kernels {

/// out = adj * x
DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& x);
/// out = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// out = a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// out = a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

/// Threads the parallel drivers will use (1 without OpenMP).
int max_threads() noexcept;

namespace serial {
DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& x);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
}  // namespace serial

}  // namespace gjepa::kernels
