#ifndef MBMRL_ENV_HPP_
#define MBMRL_ENV_HPP_

#include <cstddef>
#include <string>

#include "mbmrl/rng.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

// Three small continuous-control environments, integrated by explicit
// Euler-Maruyama: x' = x + f(x,u)*dt + sigma*sqrt(dt)*xi.
//
// pendulum_swingup  state (theta, theta_dot), torque-actuated. theta is
//                   measured from upright (0 = up, pi = hanging) and is not
//                   wrapped, which keeps the dynamics smooth for model
//                   learning. reward (1 + cos theta)/2 - 0.01 u^2.
// cartpole_swingup  state (x, x_dot, theta, theta_dot), force on the cart,
//                   theta from upright as above, pole starts hanging.
//                   reward (1 + cos theta)/2 - 0.001 u^2 - 0.005 x^2.
// point_mass_slope  state (p, v) on a 1-D track, force-actuated. reward is
//                   forward velocity minus 0.001 u^2.
enum class EnvId { kPendulumSwingup, kCartpoleSwingup, kPointMassSlope };

const char* env_name(EnvId id);
EnvId env_from_name(const std::string& name);

// Task family used both for meta-training variation and OOD meta-testing.
//   mass_scale      divides every acceleration by `magnitude` (> 0)
//   actuator_cripple multiplies action channel 0 by `magnitude` in [0, 1]
//   gravity_slope   rotates the gravity vector by `magnitude` radians
//   identity        leaves dynamics bitwise unchanged
enum class PerturbationKind { kMassScale, kActuatorCripple, kGravitySlope, kIdentity };

const char* perturbation_name(PerturbationKind kind);
PerturbationKind perturbation_from_name(const std::string& name);

struct TaskPerturbation {
  PerturbationKind kind = PerturbationKind::kIdentity;
  double magnitude = 0.0;

  void validate() const;  // throws std::invalid_argument on bad magnitude
};

struct StateVec {
  VecD values;
  double time = 0.0;
};

struct ActionVec {
  VecD values;
  double time = 0.0;
};

struct EnvSpec {
  EnvId env_id = EnvId::kPendulumSwingup;
  double dt = 0.02;
  std::size_t horizon = 200;
  double diffusion_scale = 0.0;  // per-dimension sigma in Eq-style dx = f dt + sigma dW
  VecD action_lo, action_hi;

  std::size_t state_dim() const;
  std::size_t action_dim() const;
  void validate() const;
};

EnvSpec make_env_spec(EnvId id);

// f(x, u) with the perturbation applied; u is used as passed (callers clamp)
VecD env_deriv(const EnvSpec& spec, const TaskPerturbation& pert, const VecD& x,
               const VecD& u);

// thin named handle so perturbed dynamics can be passed around as one value
struct Dynamics {
  EnvSpec spec;
  TaskPerturbation perturbation;
  VecD operator()(const VecD& x, const VecD& u) const {
    return env_deriv(spec, perturbation, x, u);
  }
};

Dynamics apply_perturbation(const EnvSpec& spec, const TaskPerturbation& pert);

double env_reward(const EnvSpec& spec, const VecD& x, const VecD& u);

VecD clamp_action(const EnvSpec& spec, const VecD& u);

// Initial-state distributions (component order matches the state layout):
//   pendulum:   theta ~ U(-pi, pi), theta_dot ~ U(-1, 1)
//   cartpole:   x ~ U(-.05, .05), x_dot ~ U(-.05, .05),
//               theta ~ pi + U(-.05, .05), theta_dot ~ U(-.05, .05)
//   point mass: p ~ U(-.5, .5), v ~ U(-.1, .1)
StateVec env_reset(const EnvSpec& spec, const TaskPerturbation& pert, Rng& rng);

struct StepResult {
  StateVec next;
  double reward = 0.0;
  bool ok = true;  // false when the next state went non-finite
};

// One Euler-Maruyama step; the action is clamped to bounds first, the reward
// is computed from the (current state, clamped action) pair, and diffusion
// noise is drawn per dimension only when diffusion_scale > 0.
StepResult env_step(const EnvSpec& spec, const TaskPerturbation& pert,
                    const StateVec& state, const ActionVec& action, Rng& rng);

}  // namespace mbmrl

#endif  // MBMRL_ENV_HPP_
