#ifndef MBMRL_ATTENTION_HPP_
#define MBMRL_ATTENTION_HPP_

#include "mbmrl/policy.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

// Per-step smoothness diagnostics of a control policy:
//   feedback_sq    squared Frobenius norm of d(mean action)/d(state)
//   feedforward_sq squared norm of the backward difference of consecutive
//                  actions over dt (0 at the first step of an episode)
//   energy         squared norm of the executed action
struct AttentionMetrics {
  double feedback_sq = 0.0;
  double feedforward_sq = 0.0;
  double energy = 0.0;
};

double feedback_norm_sq(const PolicyParams& params, const VecD& x, double t);

double feedforward_norm_sq(const VecD& u, const VecD& u_prev, double dt);

double energy(const VecD& u);

// r - alpha * (fb_sq + ff_sq); with alpha = 0 this is bitwise r
double regularized_reward(double r, double fb_sq, double ff_sq, double alpha);

// Gradient of [fb_sq(x) + ff_sq] w.r.t. the flat policy parameters, treating
// the visited state and dt as constants. Used only by the optional pathwise
// regularizer; the default training path regularizes through the return.
//   fb term: d/dtheta || d mean_action / dx ||_F^2 at x
//   ff term: d/dtheta || (mean(x) - mean(x_prev)) / dt ||^2, both endpoints
// Pass has_prev = false at episode starts (the ff term is then absent).
VecD attention_term_grad(const PolicyParams& params, const VecD& x, double t,
                         const VecD& x_prev, double t_prev, double dt, bool has_prev);

}  // namespace mbmrl

#endif  // MBMRL_ATTENTION_HPP_
