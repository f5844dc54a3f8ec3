#include "gjepa/kernels.hpp"
#include "kernel_rows.hpp"

namespace gjepa::kernels::serial {

DenseMatrix spmm(const NormalizedAdjacency& adj, const DenseMatrix& x) {
  detail::check_spmm(adj, x);
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) detail::spmm_row(adj, x, out, i);
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::check_matmul(a.cols(), b.rows(), "matmul: a.cols != b.rows");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) detail::matmul_row(a, b, out, i);
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  detail::check_matmul(a.rows(), b.rows(), "matmul_tn: a.rows != b.rows");
  const DenseMatrix at = a.transposed();
  DenseMatrix out(at.rows(), b.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) detail::matmul_row(at, b, out, i);
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  detail::check_matmul(a.cols(), b.cols(), "matmul_nt: a.cols != b.cols");
  // a * b^T through the row kernel on an explicit transpose keeps the
  // accumulation order identical to matmul().
  const DenseMatrix bt = b.transposed();
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) detail::matmul_row(a, bt, out, i);
  return out;
}

}  // namespace gjepa::kernels::serial
