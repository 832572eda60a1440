#ifndef MBMRL_ADAM_HPP_
#define MBMRL_ADAM_HPP_

#include <cstddef>

#include "mbmrl/tensor.hpp"

namespace mbmrl {

// Adam optimizer state for one flat parameter vector.
struct AdamState {
  VecD first_moment;
  VecD second_moment;
  std::size_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t param_count, double lr)
      : first_moment(param_count, 0.0), second_moment(param_count, 0.0), learning_rate(lr) {}
};

// One bias-corrected Adam descent step, in place. Throws on non-finite
// gradient entries or size mismatch.
void adam_step(VecD& params, const VecD& grads, AdamState& state);

}  // namespace mbmrl

#endif  // MBMRL_ADAM_HPP_
