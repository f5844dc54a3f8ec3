#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "gjepa/dense_matrix.hpp"

namespace gjepa {

struct GradCheckParam {
  std::string name;
  DenseMatrix* value;           // perturbed in place, restored afterwards
  const DenseMatrix* analytic;  // gradient to verify
};

struct GradCheckOptions {
  double step = 1e-5;
  // (8[f(x+h) - f(x-h)] - [f(x+2h) - f(x-2h)]) / 12h instead of
  // [f(x+h) - f(x-h)] / 2h; tolerates a larger step when the loss carries
  // rounding noise.
  bool five_point = false;
  // Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-6;
  // 0 checks every entry; otherwise a seeded random subset of this many
  // entries per parameter.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string param;
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::size_t entries_checked = 0;
  double tolerance = 0.0;
  bool passed() const noexcept { return max_rel_error < tolerance; }
};

/// Compares analytic gradients against central differences of `loss`. The
/// closure must be deterministic (freeze every random draw before calling).
/// It returns long double so callers can hand over an extended-precision
/// accumulation of the loss.
GradCheckReport grad_check(const std::function<long double()>& loss,
                           std::span<const GradCheckParam> params, double tolerance,
                           const GradCheckOptions& options = {});

}  // namespace gjepa
