#ifndef MBMRL_ENSEMBLE_HPP_
#define MBMRL_ENSEMBLE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "mbmrl/adam.hpp"
#include "mbmrl/env.hpp"
#include "mbmrl/mlp.hpp"
#include "mbmrl/policy.hpp"
#include "mbmrl/rng.hpp"
#include "mbmrl/trajectory.hpp"

namespace mbmrl {

// per-dimension whitening fitted on the training split; std floored at 1e-8
struct Normalizer {
  VecD mean, std;

  void fit(const std::vector<VecD>& rows);
  VecD normalize(const VecD& v) const;
  VecD denormalize(const VecD& v) const;
};

// M independently initialized state-derivative models trained on bootstraps
// of the shared transition pool. Inputs are [x; u], targets (x' - x)/dt.
struct DynamicsEnsemble {
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::size_t elite_count = 0;
  std::vector<MlpNetwork> members;
  std::vector<AdamState> optimizers;
  VecD holdout_losses;          // +inf until first trained
  std::vector<char> elite_flags;
  std::vector<char> reinit_flags;  // set when a member was reset mid-training
  Normalizer input_norm, target_norm;
  bool normalizers_ready = false;

  std::size_t size() const { return members.size(); }
};

DynamicsEnsemble make_ensemble(std::size_t state_dim, std::size_t action_dim,
                               std::size_t members, std::size_t elite_count,
                               const std::vector<std::size_t>& hidden,
                               Activation activation, double learning_rate, Rng& rng);

// (x_next - x_n) / dt_n, the regression target
VecD finite_diff_target(const TransitionRecord& record);

struct EnsembleTrainReport {
  // loss_history[m][e] = mean minibatch training MSE of member m in pass e
  std::vector<VecD> loss_history;
  VecD final_train_loss;
  VecD final_holdout_loss;
};

// Bootstrap + holdout training. A deterministic shuffle splits the pool into
// train/holdout; normalizers are fitted on the train split only; each member
// trains on its own bootstrap resample for `epochs` passes of `batch_size`
// minibatches. `max_batches_per_epoch` caps the minibatch count per pass
// (0 = full pass). Elite flags are refreshed from holdout losses.
EnsembleTrainReport train_ensemble(DynamicsEnsemble& ensemble, const ReplayBuffer& buffer,
                                   std::size_t epochs, std::size_t batch_size,
                                   double holdout_ratio, Rng& rng,
                                   std::size_t max_batches_per_epoch = 0);

// de-normalized model output f_hat(x, u)
VecD predict(const DynamicsEnsemble& ensemble, std::size_t member_index, const VecD& x,
             const VecD& u);

struct RolloutOptions {
  std::size_t horizon = 200;
  double dt = 0.02;
  double divergence_bound = 100.0;  // max |state component| before truncation
  bool stochastic_policy = true;    // sample actions (training) vs mean (eval)
};

// Iterates x_{k+1} = x_k + f_hat(x_k, u_k) dt inside one member, collecting
// rewards from the environment's analytic reward and per-step attention
// metrics (feedback at the visited state, feedforward from consecutive mean
// actions, energy of the executed action).
Trajectory imaginary_rollout(const DynamicsEnsemble& ensemble, std::size_t member_index,
                             const PolicyParams& policy, const EnvSpec& env,
                             const StateVec& initial_state, const RolloutOptions& options,
                             Rng& rng);

// stable JSON checkpoint (layer sizes, parameters, optimizer state,
// normalizers, holdout losses, elite flags)
std::string ensemble_to_json(const DynamicsEnsemble& ensemble);
DynamicsEnsemble ensemble_from_json(const std::string& text);

}  // namespace mbmrl

#endif  // MBMRL_ENSEMBLE_HPP_
