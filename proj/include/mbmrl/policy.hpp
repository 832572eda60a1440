#ifndef MBMRL_POLICY_HPP_
#define MBMRL_POLICY_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mbmrl/env.hpp"
#include "mbmrl/mlp.hpp"
#include "mbmrl/rng.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

// Two policy parameterizations over the same interface.
//
// mlp_gaussian        u = center + half_range * tanh(z),
//                     z ~ N(mean_net(x), diag(exp(log_std))^2). The log-prob
//                     carries the tanh change-of-variables term, computed in
//                     the numerically safe softplus form.
// linear_time_varying u = K(t) x + v(t) + eps, with K and v piecewise-linear
//                     over a uniform knot grid on [0, duration]. eps either
//                     comes from an external noise process or is drawn
//                     N(0, exp(log_std)^2); the recorded log-prob is the iid
//                     Gaussian density of eps either way.
//
// Flat parameter layout (used by every gradient/update routine):
//   mlp_gaussian:        [mean_net params..., log_std...]
//   linear_time_varying: [K knot 0 row-major, ..., K knot J-1,
//                         v knot 0, ..., v knot J-1, log_std...]
enum class PolicyKind { kMlpGaussian, kLinearTimeVarying };

const char* policy_kind_name(PolicyKind kind);
PolicyKind policy_kind_from_name(const std::string& name);

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

struct PolicyParams {
  PolicyKind kind = PolicyKind::kMlpGaussian;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  VecD action_lo, action_hi;
  VecD log_std;  // always kept inside [kLogStdMin, kLogStdMax]

  // mlp_gaussian
  MlpNetwork mean_net;

  // linear_time_varying
  std::vector<DenseMatrix> k_knots;  // action_dim x state_dim each
  std::vector<VecD> v_knots;
  double knot_duration = 4.0;  // the grid spans [0, knot_duration]

  std::size_t param_count() const;
  VecD get_params() const;
  void set_params(const VecD& flat);  // clamps log_std back into range
  void clamp_log_std();

  // interpolated schedule values for the linear kind
  DenseMatrix k_at(double t) const;
  VecD v_at(double t) const;
};

PolicyParams make_mlp_policy(std::size_t state_dim, std::size_t action_dim,
                             const VecD& action_lo, const VecD& action_hi,
                             const std::vector<std::size_t>& hidden,
                             Activation activation, double log_std_init, Rng& rng);

PolicyParams make_linear_policy(std::size_t state_dim, std::size_t action_dim,
                                const VecD& action_lo, const VecD& action_hi,
                                std::size_t knots, double knot_duration,
                                double log_std_init);

struct PolicySample {
  ActionVec action;
  double log_prob = 0.0;
  VecD pre_squash;  // mlp: z before tanh; linear: the pre-clamp action Kx+v+eps
};

// Samples an action. For the linear kind an external noise vector (e.g. an
// OU draw) replaces the internal Gaussian when provided; the mlp kind always
// samples its own Gaussian and ignores `noise`.
PolicySample act(const PolicyParams& params, const VecD& x, double t,
                 const std::optional<VecD>& noise, Rng& rng);

// deterministic part of the policy (used for evaluation and for the
// feedback-norm metric)
VecD mean_action(const PolicyParams& params, const VecD& x, double t);

// Jacobian of mean_action with respect to the state; exactly K(t) for the
// linear kind, chain rule through the tanh squash for the mlp kind
DenseMatrix policy_state_jacobian(const PolicyParams& params, const VecD& x, double t);

// log-probability of a stored sample (identified by its pre_squash vector)
double policy_log_prob(const PolicyParams& params, const VecD& x, double t,
                       const VecD& pre_squash);

// exact gradient of policy_log_prob w.r.t. the flat parameter vector
VecD log_prob_grad(const PolicyParams& params, const VecD& x, double t,
                   const VecD& pre_squash);

// serialization (stable JSON; doubles round-trip exactly)
std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(const std::string& text);

}  // namespace mbmrl

#endif  // MBMRL_POLICY_HPP_
