#include "deephedge/adam.hpp"

#include <cmath>

#include "deephedge/errors.hpp"

namespace deephedge::nn {

AdamState AdamState::for_size(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state) {
  if (theta.size() != grad.size() || state.m.size() != theta.size() ||
      state.v.size() != theta.size()) {
    throw ContractViolation("adam_step: shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
  }
  state.step_count += 1;
  const auto n = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, n);
  const double bias2 = 1.0 - std::pow(state.beta2, n);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    theta[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace deephedge::nn
