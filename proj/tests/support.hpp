#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gjepa/dataset.hpp"
#include "gjepa/graph.hpp"
#include "gjepa/random.hpp"

namespace gjepa::test {

inline std::filesystem::path data_dir() { return GJEPA_TEST_DATA_DIR; }

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (double& x : m.values()) x = scale * standard_normal(rng);
  return m;
}

/// Erdos-Renyi graph over n nodes with Gaussian features.
inline CsrGraph random_graph(std::size_t n, double p, std::size_t d, Rng& rng,
                             std::size_t classes = 0) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (uniform01(rng) < p) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  std::optional<std::vector<int>> labels;
  if (classes > 0) {
    labels.emplace(n);
    for (std::size_t u = 0; u < n; ++u) (*labels)[u] = static_cast<int>(u % classes);
  }
  return CsrGraph::from_edges(n, edges, random_matrix(n, d, rng), labels);
}

inline DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

/// D^-1/2 (A + I) D^-1/2 by explicit dense products.
inline DenseMatrix dense_normalized(const CsrGraph& g) {
  const std::size_t n = g.n_nodes();
  DenseMatrix a_hat = DenseMatrix::identity(n);
  for (const Edge& e : g.undirected_edges()) {
    a_hat(e.u, e.v) = 1.0;
    a_hat(e.v, e.u) = 1.0;
  }
  DenseMatrix d_inv_sqrt(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a_hat(i, j);
    d_inv_sqrt(i, i) = 1.0 / std::sqrt(deg);
  }
  return dense_matmul(dense_matmul(d_inv_sqrt, a_hat), d_inv_sqrt);
}

inline Dataset load_fixture(const std::string& name) { return load_dataset(data_dir() / name); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gjepa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace gjepa::test
