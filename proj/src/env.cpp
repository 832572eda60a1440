#include "mbmrl/env.hpp"

#include <cmath>
#include <stdexcept>

namespace mbmrl {

namespace {

constexpr double kGravity = 9.81;

// pendulum: point mass m on a rigid rod of length l
constexpr double kPendulumMass = 1.0;
constexpr double kPendulumLength = 1.0;

// cartpole: cart mass, pole mass, pole half-length
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kPoleHalfLength = 0.5;

constexpr double kPi = 3.14159265358979323846;

struct PerturbationTerms {
  double mass_mult = 1.0;   // divides accelerations
  double action_gain = 1.0; // multiplies action channel 0
  double slope = 0.0;       // gravity rotation in radians
};

PerturbationTerms resolve(const TaskPerturbation& pert) {
  PerturbationTerms t;
  switch (pert.kind) {
    case PerturbationKind::kMassScale:
      t.mass_mult = pert.magnitude;
      break;
    case PerturbationKind::kActuatorCripple:
      t.action_gain = pert.magnitude;
      break;
    case PerturbationKind::kGravitySlope:
      t.slope = pert.magnitude;
      break;
    case PerturbationKind::kIdentity:
      break;
  }
  return t;
}

}  // namespace

const char* env_name(EnvId id) {
  switch (id) {
    case EnvId::kPendulumSwingup: return "pendulum_swingup";
    case EnvId::kCartpoleSwingup: return "cartpole_swingup";
    case EnvId::kPointMassSlope: return "point_mass_slope";
  }
  return "unknown";
}

EnvId env_from_name(const std::string& name) {
  if (name == "pendulum_swingup") return EnvId::kPendulumSwingup;
  if (name == "cartpole_swingup") return EnvId::kCartpoleSwingup;
  if (name == "point_mass_slope") return EnvId::kPointMassSlope;
  throw std::invalid_argument("unknown environment: " + name);
}

const char* perturbation_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kMassScale: return "mass_scale";
    case PerturbationKind::kActuatorCripple: return "actuator_cripple";
    case PerturbationKind::kGravitySlope: return "gravity_slope";
    case PerturbationKind::kIdentity: return "identity";
  }
  return "unknown";
}

PerturbationKind perturbation_from_name(const std::string& name) {
  if (name == "mass_scale") return PerturbationKind::kMassScale;
  if (name == "actuator_cripple") return PerturbationKind::kActuatorCripple;
  if (name == "gravity_slope") return PerturbationKind::kGravitySlope;
  if (name == "identity") return PerturbationKind::kIdentity;
  throw std::invalid_argument("unknown perturbation: " + name);
}

void TaskPerturbation::validate() const {
  switch (kind) {
    case PerturbationKind::kMassScale:
      if (!(magnitude > 0.0))
        throw std::invalid_argument("mass_scale magnitude must be > 0");
      break;
    case PerturbationKind::kActuatorCripple:
      if (!(magnitude >= 0.0 && magnitude <= 1.0))
        throw std::invalid_argument("actuator_cripple magnitude must be in [0, 1]");
      break;
    case PerturbationKind::kGravitySlope:
      if (!std::isfinite(magnitude))
        throw std::invalid_argument("gravity_slope magnitude must be finite");
      break;
    case PerturbationKind::kIdentity:
      break;
  }
}

std::size_t EnvSpec::state_dim() const {
  switch (env_id) {
    case EnvId::kPendulumSwingup: return 2;
    case EnvId::kCartpoleSwingup: return 4;
    case EnvId::kPointMassSlope: return 2;
  }
  return 0;
}

std::size_t EnvSpec::action_dim() const { return 1; }

void EnvSpec::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("env dt must be > 0");
  if (horizon < 1) throw std::invalid_argument("env horizon must be >= 1");
  if (!(diffusion_scale >= 0.0))
    throw std::invalid_argument("env diffusion_scale must be >= 0");
  if (action_lo.size() != action_dim() || action_hi.size() != action_dim())
    throw std::invalid_argument("action bound size mismatch");
  for (std::size_t i = 0; i < action_lo.size(); ++i) {
    if (!std::isfinite(action_lo[i]) || !std::isfinite(action_hi[i]) ||
        !(action_lo[i] < action_hi[i]))
      throw std::invalid_argument("action bounds must be finite with lo < hi");
  }
}

EnvSpec make_env_spec(EnvId id) {
  EnvSpec spec;
  spec.env_id = id;
  spec.dt = 0.02;
  spec.horizon = 200;
  spec.diffusion_scale = 0.0;
  switch (id) {
    case EnvId::kPendulumSwingup:
      spec.action_lo = {-6.0};
      spec.action_hi = {6.0};
      break;
    case EnvId::kCartpoleSwingup:
      spec.action_lo = {-10.0};
      spec.action_hi = {10.0};
      break;
    case EnvId::kPointMassSlope:
      spec.action_lo = {-2.0};
      spec.action_hi = {2.0};
      break;
  }
  return spec;
}

VecD env_deriv(const EnvSpec& spec, const TaskPerturbation& pert, const VecD& x,
               const VecD& u) {
  const PerturbationTerms t = resolve(pert);
  const double force = u[0] * t.action_gain;

  switch (spec.env_id) {
    case EnvId::kPendulumSwingup: {
      const double theta = x[0];
      const double theta_dot = x[1];
      // theta from upright; a rotated gravity vector shifts the equilibria
      double theta_dd =
          kGravity / kPendulumLength * std::sin(theta - t.slope) +
          force / (kPendulumMass * kPendulumLength * kPendulumLength);
      theta_dd /= t.mass_mult;
      return {theta_dot, theta_dd};
    }
    case EnvId::kCartpoleSwingup: {
      const double x_dot = x[1];
      const double theta = x[2];
      const double theta_dot = x[3];
      const double sin_t = std::sin(theta);
      const double cos_t = std::cos(theta);
      const double total_mass = kCartMass + kPoleMass;
      // gravity rotated by `slope`: the along-track component acts as a
      // uniform field (adds to x_dd only, by the equivalence principle),
      // the perpendicular component replaces g in the pole equations
      const double g_perp = kGravity * std::cos(t.slope);
      const double temp =
          (force + kPoleMass * kPoleHalfLength * theta_dot * theta_dot * sin_t) /
          total_mass;
      double theta_dd =
          (g_perp * sin_t - cos_t * temp) /
          (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
      double x_dd = temp - kPoleMass * kPoleHalfLength * theta_dd * cos_t / total_mass;
      if (t.slope != 0.0) x_dd += kGravity * std::sin(t.slope);
      theta_dd /= t.mass_mult;
      x_dd /= t.mass_mult;
      return {x_dot, x_dd, theta_dot, theta_dd};
    }
    case EnvId::kPointMassSlope: {
      const double v = x[1];
      double v_dot = force;
      if (t.slope != 0.0) v_dot += kGravity * std::sin(t.slope);
      v_dot /= t.mass_mult;
      return {v, v_dot};
    }
  }
  throw std::logic_error("unreachable env id");
}

Dynamics apply_perturbation(const EnvSpec& spec, const TaskPerturbation& pert) {
  pert.validate();
  return Dynamics{spec, pert};
}

double env_reward(const EnvSpec& spec, const VecD& x, const VecD& u) {
  switch (spec.env_id) {
    case EnvId::kPendulumSwingup:
      return 0.5 * (1.0 + std::cos(x[0])) - 0.01 * u[0] * u[0];
    case EnvId::kCartpoleSwingup:
      return 0.5 * (1.0 + std::cos(x[2])) - 0.001 * u[0] * u[0] - 0.005 * x[0] * x[0];
    case EnvId::kPointMassSlope:
      return x[1] - 0.001 * u[0] * u[0];
  }
  return 0.0;
}

VecD clamp_action(const EnvSpec& spec, const VecD& u) {
  VecD out = u;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < spec.action_lo[i]) out[i] = spec.action_lo[i];
    if (out[i] > spec.action_hi[i]) out[i] = spec.action_hi[i];
  }
  return out;
}

StateVec env_reset(const EnvSpec& spec, const TaskPerturbation& pert, Rng& rng) {
  (void)pert;  // the initial distribution is perturbation-independent
  StateVec s;
  s.time = 0.0;
  switch (spec.env_id) {
    case EnvId::kPendulumSwingup:
      s.values = {rng.uniform(-kPi, kPi), rng.uniform(-1.0, 1.0)};
      break;
    case EnvId::kCartpoleSwingup:
      s.values = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                  kPi + rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
      break;
    case EnvId::kPointMassSlope:
      s.values = {rng.uniform(-0.5, 0.5), rng.uniform(-0.1, 0.1)};
      break;
  }
  return s;
}

StepResult env_step(const EnvSpec& spec, const TaskPerturbation& pert,
                    const StateVec& state, const ActionVec& action, Rng& rng) {
  const VecD u = clamp_action(spec, action.values);
  const VecD f = env_deriv(spec, pert, state.values, u);

  StepResult result;
  result.reward = env_reward(spec, state.values, u);
  result.next.time = state.time + spec.dt;
  result.next.values.resize(state.values.size());
  const double noise_scale = spec.diffusion_scale * std::sqrt(spec.dt);
  for (std::size_t i = 0; i < state.values.size(); ++i) {
    double v = state.values[i] + f[i] * spec.dt;
    if (spec.diffusion_scale > 0.0) v += noise_scale * rng.normal();
    result.next.values[i] = v;
  }
  result.ok = all_finite(result.next.values);
  return result;
}

}  // namespace mbmrl
