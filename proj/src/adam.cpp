#include "mbmrl/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mbmrl {

void adam_step(VecD& params, const VecD& grads, AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
    throw std::invalid_argument("adam_step: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i]))
      throw std::invalid_argument("adam_step: non-finite gradient at index " + std::to_string(i));
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace mbmrl
