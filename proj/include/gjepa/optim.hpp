#pragma once

#include <cstdint>

#include "gjepa/dense_matrix.hpp"

namespace gjepa {

struct AdamState {
  DenseMatrix first_moment;
  DenseMatrix second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_param(const DenseMatrix& param);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update in place. Throws Errc::divergence on a
/// non-finite gradient entry (param and state are left untouched).
void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr);

/// Cosine annealing with warm restarts every `restart_period` epochs.
struct LrSchedule {
  double base_lr = 1e-3;
  int restart_period = 75;
  double min_lr = 1e-5;
};

double cosine_lr(const LrSchedule& schedule, int epoch);

}  // namespace gjepa
