#include <algorithm>
#include <limits>
#include <string>

#include "gjepa/cluster.hpp"
#include "gjepa/error.hpp"

namespace gjepa {

// O(n^3) Hungarian method with row/column potentials.
std::vector<int> solve_assignment(const DenseMatrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) fail(Errc::dimension_mismatch, "assignment cost must be square");
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based potentials; p[j] = row matched to column j, way[] = augmenting path
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

std::size_t label_agreement(const PseudoLabels& a, const PseudoLabels& b) {
  if (a.labels.size() != b.labels.size()) fail(Errc::dimension_mismatch, "label length");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) same += a.labels[i] == b.labels[i];
  return same;
}

PseudoLabels align_labels(const PseudoLabels& a, const PseudoLabels& b) {
  if (a.labels.size() != b.labels.size())
    fail(Errc::dimension_mismatch, "align_labels: label vectors differ in length");
  if (a.k != b.k) fail(Errc::invalid_argument, "align_labels: cluster counts differ");
  const std::size_t k = a.k;
  // overlap[bi][ai]; minimize (max - overlap)
  DenseMatrix overlap(k, k);
  for (std::size_t n = 0; n < a.labels.size(); ++n)
    overlap(static_cast<std::size_t>(b.labels[n]), static_cast<std::size_t>(a.labels[n])) += 1.0;
  double mx = 0.0;
  for (double x : overlap.values()) mx = std::max(mx, x);
  DenseMatrix cost(k, k);
  for (std::size_t i = 0; i < cost.size(); ++i) cost.data()[i] = mx - overlap.data()[i];
  const std::vector<int> map = solve_assignment(cost);

  // Ties: keep b's own numbering when the identity already attains the optimum.
  double best = 0.0, ident = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    best += overlap(j, static_cast<std::size_t>(map[j]));
    ident += overlap(j, j);
  }
  PseudoLabels out = b;
  if (ident >= best) return out;
  for (int& l : out.labels) l = map[static_cast<std::size_t>(l)];
  return out;
}

}  // namespace gjepa
