#include "gjepa/kernels.hpp"
#include "kernel_rows.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gjepa::kernels {

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
// Rows are independent; dynamic scheduling evens out skewed degree rows.
template <class RowFn>
void for_each_row(std::size_t rows, RowFn&& fn) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
}
}  // namespace

DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& x) {
  detail::check_spmm(adj, x);
  DenseMatrix out(x.rows(), x.cols());
  for_each_row(out.rows(), [&](std::size_t i) { detail::spmm_row(adj, x, out, i); });
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::check_matmul(a.cols(), b.rows(), "matmul: a.cols != b.rows");
  DenseMatrix out(a.rows(), b.cols());
  for_each_row(out.rows(), [&](std::size_t i) { detail::matmul_row(a, b, out, i); });
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  detail::check_matmul(a.rows(), b.rows(), "matmul_tn: a.rows != b.rows");
  const DenseMatrix at = a.transposed();
  DenseMatrix out(at.rows(), b.cols());
  for_each_row(out.rows(), [&](std::size_t i) { detail::matmul_row(at, b, out, i); });
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  detail::check_matmul(a.cols(), b.cols(), "matmul_nt: a.cols != b.cols");
  const DenseMatrix bt = b.transposed();
  DenseMatrix out(a.rows(), b.rows());
  for_each_row(out.rows(), [&](std::size_t i) { detail::matmul_row(a, bt, out, i); });
  return out;
}

}  // namespace gjepa::kernels
