#ifndef MBMRL_META_HPP_
#define MBMRL_META_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbmrl/ensemble.hpp"
#include "mbmrl/env.hpp"
#include "mbmrl/noise.hpp"
#include "mbmrl/policy.hpp"
#include "mbmrl/trajectory.hpp"

namespace mbmrl {

enum class BaselineKind { kTimeAvg, kNone };

const char* baseline_kind_name(BaselineKind kind);
BaselineKind baseline_kind_from_name(const std::string& name);

// Everything the training loop needs beyond the environment itself.
//
// The regularizer enters training as reward shaping inside the return
// (score-function path). The optional pathwise_regularizer flag instead
// differentiates the feedback/feedforward terms directly at the visited
// states (undiscounted, averaged over trajectories) and feeds the raw
// reward through the score function.
struct MetaConfig {
  double alpha = 0.0;   // regularization weight
  double beta = 0.05;   // inner adaptation step size
  double delta = 1e-3;  // trust-region radius parameter (step length sqrt(2*delta))
  double gamma = 0.99;  // discount
  std::size_t ensemble_size = 5;
  std::size_t elite_count = 2;
  std::size_t imaginary_rollouts = 8;  // trajectories per inner/outer estimate
  std::size_t epochs = 30;
  std::size_t trajectories_per_member = 1;  // real collection per member per epoch
  std::size_t eval_episodes = 10;
  BaselineKind baseline = BaselineKind::kTimeAvg;
  bool regularizer_enabled = true;
  bool pathwise_regularizer = false;
  double divergence_bound = 100.0;

  // dynamics-model training per epoch
  std::size_t model_epochs = 8;       // passes over the bootstrap per call
  std::size_t model_batch_size = 256;
  double model_holdout_ratio = 0.2;
  std::size_t model_max_batches = 16;  // minibatch cap per pass (0 = full pass)

  void validate() const;
};

// Σ_{l=k}^{T} gamma^(l-k) * r_reg,l (discount re-based at k, no baseline)
double discounted_reg_return(const Trajectory& traj, std::size_t k, double gamma,
                             double alpha, bool regularizer_enabled);

// Score-function gradient that ASCENDS the regularized return:
//   (1/N) Σ_traj Σ_k grad log pi(u_k|x_k) * (G_k - b_k)
// b_k is the across-trajectory mean of G_k for the time_avg baseline.
VecD vpg_gradient(const std::vector<Trajectory>& trajs, const PolicyParams& params,
                  const MetaConfig& config);

// One gradient-ascent step specialized to ensemble member i, from N imaginary
// rollouts. Diverged rollouts are dropped; throws if all of them diverged.
PolicyParams inner_adapt(const DynamicsEnsemble& ensemble, std::size_t member_index,
                         const PolicyParams& params, const EnvSpec& env,
                         const MetaConfig& config, Rng& rng);

struct MetaGrad {
  double objective = 0.0;  // post-adaptation return averaged over members
  VecD grad;               // first-order meta-gradient (taken at the adapted params)
};

MetaGrad meta_objective_grad(const DynamicsEnsemble& ensemble, const PolicyParams& params,
                             const EnvSpec& env, const MetaConfig& config, Rng& rng);

// closed-form maximizer of g.(p'-p) subject to 0.5*||p'-p||^2 <= delta:
// p + sqrt(2*delta) * g/||g||, or p unchanged when g = 0
VecD trust_region_step(const VecD& params, const VecD& grad, double delta);

// One real-environment episode. When `noise` is non-null its draws are added
// as exploration: the linear policy consumes them as its own eps (log-probs
// stay exact), the mlp policy adds them on top of its Gaussian sample (such
// trajectories feed model learning only). stochastic=false executes mean
// actions (evaluation).
Trajectory real_rollout(const EnvSpec& env, const TaskPerturbation& pert,
                        const PolicyParams& policy, NoiseSource* noise, bool stochastic,
                        double divergence_bound, Rng& rng);

struct EvalReport {
  double return_mean = 0.0;  // undiscounted sum of raw task rewards
  double return_std = 0.0;   // sample std over episodes
  double feedback_mean = 0.0;     // per-step means over all episode steps
  double feedforward_mean = 0.0;
  double energy_mean = 0.0;
  VecD episode_returns;
  VecD episode_feedback;  // per-episode means of the per-step metrics
  VecD episode_feedforward;
  VecD episode_energy;
};

EvalReport evaluate_policy(const EnvSpec& env, const TaskPerturbation& pert,
                           const PolicyParams& policy, std::size_t episodes,
                           bool deterministic, Rng& rng);

struct TrainState {
  EnvSpec env;
  std::vector<TaskPerturbation> train_tasks;
  PolicyParams policy;
  DynamicsEnsemble ensemble;
  ReplayBuffer buffer{100000};
  NoiseSource noise;  // per-rollout copies are reset at episode starts
  std::uint64_t master_seed = 0;
  std::size_t epoch = 0;
};

struct EpochReport {
  std::size_t epoch = 0;
  std::size_t failed_members = 0;  // members skipped during collection this epoch
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double eval_feedback_mean = 0.0;
  double eval_feedforward_mean = 0.0;
  double eval_energy_mean = 0.0;
  double collect_return_mean = 0.0;  // raw return of the exploration episodes
  double model_train_loss = 0.0;     // means over members
  double model_holdout_loss = 0.0;
  double meta_objective = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
};

// One pass of the alternating scheme:
//  (a) per member: adapt, collect real episodes on a rotating training task,
//      append to the shared pool; then train every member on its bootstrap;
//  (b) meta-gradient + trust-region update of the policy;
//  (c) deterministic evaluation on the unperturbed task.
// All randomness is drawn from streams derived from (master_seed, epoch),
// so resuming from a checkpoint is bit-compatible with an unbroken run.
EpochReport run_training_epoch(TrainState& state, const MetaConfig& config);

struct MetaTestReport {
  EvalReport pre;   // meta-policy, pre-adaptation
  EvalReport post;  // after adapt_steps real-environment VPG steps
  PolicyParams adapted;
};

// Pre/post evaluations share one derived evaluation stream, so they see the
// same initial states and adapt_steps = 0 reproduces pre exactly.
MetaTestReport meta_test(const EnvSpec& env, const TaskPerturbation& pert,
                         const PolicyParams& policy, std::size_t adapt_steps,
                         std::size_t adapt_trajectories, const MetaConfig& config,
                         Rng& rng);

// full training-state checkpoint (policy, ensemble, optimizer state, replay
// pool, epoch counter); restoring resumes bit-compatibly
std::string train_state_to_json(const TrainState& state);
TrainState train_state_from_json(const std::string& text);

}  // namespace mbmrl

#endif  // MBMRL_META_HPP_
