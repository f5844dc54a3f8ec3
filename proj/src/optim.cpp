#include "gjepa/optim.hpp"

#include <cmath>
#include <numbers>

#include "gjepa/error.hpp"

namespace gjepa {

AdamState AdamState::for_param(const DenseMatrix& param) {
  AdamState s;
  s.first_moment = DenseMatrix(param.rows(), param.cols());
  s.second_moment = DenseMatrix(param.rows(), param.cols());
  return s;
}

void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr) {
  if (!param.same_shape(grad) || !param.same_shape(state.first_moment) ||
      !param.same_shape(state.second_moment))
    fail(Errc::dimension_mismatch, "adam_step: parameter, gradient and moments differ in shape");
  if (!grad.all_finite()) fail(Errc::divergence, "non-finite gradient");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  double* p = param.data();
  const double* g = grad.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

double cosine_lr(const LrSchedule& s, int epoch) {
  if (s.restart_period <= 0) fail(Errc::invalid_argument, "restart_period must be positive");
  if (epoch < 0) fail(Errc::invalid_argument, "negative epoch");
  const double phase = static_cast<double>(epoch % s.restart_period) / s.restart_period;
  return s.min_lr + 0.5 * (s.base_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * phase));
}

}  // namespace gjepa
