#include "mbmrl/meta.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbmrl/attention.hpp"
#include "mbmrl/serialize.hpp"

namespace mbmrl {

namespace {

// stream tags for the per-epoch derived generators; every consumer gets its
// own child so resuming at an epoch boundary replays identical draws
constexpr std::uint64_t kTagAdapt = 100;
constexpr std::uint64_t kTagCollect = 200;
constexpr std::uint64_t kTagModel = 300;
constexpr std::uint64_t kTagMeta = 400;
constexpr std::uint64_t kTagEval = 500;

double dot_self(const VecD& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

// returns-to-go for every k in one backward sweep
VecD returns_to_go(const Trajectory& traj, double gamma, double alpha, bool shaped) {
  VecD g(traj.length(), 0.0);
  double acc = 0.0;
  for (std::size_t l = traj.length(); l-- > 0;) {
    const TrajStep& s = traj.steps[l];
    const double r = shaped ? regularized_reward(s.reward, s.metrics.feedback_sq,
                                                 s.metrics.feedforward_sq, alpha)
                            : s.reward;
    acc = r + gamma * acc;
    g[l] = acc;
  }
  return g;
}

std::vector<Trajectory> drop_diverged(std::vector<Trajectory> trajs) {
  std::vector<Trajectory> kept;
  kept.reserve(trajs.size());
  for (auto& t : trajs)
    if (!t.diverged && t.length() > 0) kept.push_back(std::move(t));
  return kept;
}

}  // namespace

const char* baseline_kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kTimeAvg: return "time_avg";
    case BaselineKind::kNone: return "none";
  }
  return "unknown";
}

BaselineKind baseline_kind_from_name(const std::string& name) {
  if (name == "time_avg") return BaselineKind::kTimeAvg;
  if (name == "none") return BaselineKind::kNone;
  throw std::invalid_argument("unknown baseline kind: " + name);
}

void MetaConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("gamma must be in (0, 1]");
  if (ensemble_size == 0) throw std::invalid_argument("ensemble_size must be >= 1");
  if (elite_count == 0 || elite_count > ensemble_size)
    throw std::invalid_argument("elite_count must be in [1, ensemble_size]");
  if (imaginary_rollouts == 0)
    throw std::invalid_argument("imaginary_rollouts must be >= 1");
  if (trajectories_per_member == 0)
    throw std::invalid_argument("trajectories_per_member must be >= 1");
  if (eval_episodes == 0) throw std::invalid_argument("eval_episodes must be >= 1");
  if (!(divergence_bound > 0.0))
    throw std::invalid_argument("divergence_bound must be > 0");
  if (model_epochs == 0) throw std::invalid_argument("model_epochs must be >= 1");
  if (model_batch_size == 0) throw std::invalid_argument("model_batch_size must be >= 1");
  if (!(model_holdout_ratio > 0.0) || !(model_holdout_ratio < 1.0))
    throw std::invalid_argument("model_holdout_ratio must be in (0, 1)");
}

double discounted_reg_return(const Trajectory& traj, std::size_t k, double gamma,
                             double alpha, bool regularizer_enabled) {
  if (k >= traj.length()) throw std::out_of_range("return index past trajectory end");
  double acc = 0.0;
  for (std::size_t l = traj.length(); l-- > k;) {
    const TrajStep& s = traj.steps[l];
    const double r = regularizer_enabled
                         ? regularized_reward(s.reward, s.metrics.feedback_sq,
                                              s.metrics.feedforward_sq, alpha)
                         : s.reward;
    acc = r + gamma * acc;
  }
  return acc;
}

VecD vpg_gradient(const std::vector<Trajectory>& trajs, const PolicyParams& params,
                  const MetaConfig& config) {
  if (trajs.empty()) throw std::invalid_argument("vpg_gradient needs >= 1 trajectory");
  // with the pathwise option the shaping moves out of the return
  const bool shaped = config.regularizer_enabled && !config.pathwise_regularizer;

  std::vector<VecD> g;
  g.reserve(trajs.size());
  std::size_t max_len = 0;
  for (const auto& t : trajs) {
    g.push_back(returns_to_go(t, config.gamma, config.alpha, shaped));
    max_len = std::max(max_len, t.length());
  }

  VecD baseline(max_len, 0.0);
  if (config.baseline == BaselineKind::kTimeAvg) {
    for (std::size_t k = 0; k < max_len; ++k) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < trajs.size(); ++t)
        if (k < g[t].size()) {
          sum += g[t][k];
          ++n;
        }
      baseline[k] = sum / static_cast<double>(n);
    }
  }

  VecD grad(params.param_count(), 0.0);
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    for (std::size_t k = 0; k < trajs[t].length(); ++k) {
      const TrajStep& s = trajs[t].steps[k];
      const double adv = g[t][k] - baseline[k];
      const VecD lg = log_prob_grad(params, s.state, s.time, s.pre_squash);
      for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += lg[d] * adv;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(trajs.size());
  for (double& d : grad) d *= inv_n;

  if (config.regularizer_enabled && config.pathwise_regularizer && config.alpha != 0.0) {
    VecD reg(params.param_count(), 0.0);
    for (const auto& traj : trajs) {
      for (std::size_t k = 0; k < traj.length(); ++k) {
        const TrajStep& s = traj.steps[k];
        const bool has_prev = k > 0;
        const VecD px = has_prev ? traj.steps[k - 1].state : s.state;
        const double pt = has_prev ? traj.steps[k - 1].time : s.time;
        const double dt = has_prev ? s.time - pt : 1.0;
        const VecD ag = attention_term_grad(params, s.state, s.time, px, pt, dt, has_prev);
        for (std::size_t d = 0; d < reg.size(); ++d) reg[d] += ag[d];
      }
    }
    for (std::size_t d = 0; d < grad.size(); ++d)
      grad[d] -= config.alpha * inv_n * reg[d];
  }
  return grad;
}

PolicyParams inner_adapt(const DynamicsEnsemble& ensemble, std::size_t member_index,
                         const PolicyParams& params, const EnvSpec& env,
                         const MetaConfig& config, Rng& rng) {
  RolloutOptions opt;
  opt.horizon = env.horizon;
  opt.dt = env.dt;
  opt.divergence_bound = config.divergence_bound;
  opt.stochastic_policy = true;

  std::vector<Trajectory> trajs;
  trajs.reserve(config.imaginary_rollouts);
  const TaskPerturbation none;
  for (std::size_t j = 0; j < config.imaginary_rollouts; ++j) {
    Rng traj_rng = rng.derive(j);
    const StateVec x0 = env_reset(env, none, traj_rng);
    trajs.push_back(
        imaginary_rollout(ensemble, member_index, params, env, x0, opt, traj_rng));
  }
  trajs = drop_diverged(std::move(trajs));
  if (trajs.empty())
    throw std::runtime_error("inner adaptation: every model rollout diverged (member " +
                             std::to_string(member_index) + ")");

  const VecD grad = vpg_gradient(trajs, params, config);
  VecD p = params.get_params();
  for (std::size_t d = 0; d < p.size(); ++d) p[d] += config.beta * grad[d];
  PolicyParams adapted = params;
  adapted.set_params(p);
  return adapted;
}

MetaGrad meta_objective_grad(const DynamicsEnsemble& ensemble, const PolicyParams& params,
                             const EnvSpec& env, const MetaConfig& config, Rng& rng) {
  if (ensemble.size() == 0) throw std::invalid_argument("empty ensemble");
  MetaGrad out;
  out.grad.assign(params.param_count(), 0.0);

  RolloutOptions opt;
  opt.horizon = env.horizon;
  opt.dt = env.dt;
  opt.divergence_bound = config.divergence_bound;
  opt.stochastic_policy = true;
  const TaskPerturbation none;

  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    Rng adapt_rng = rng.derive(2 * i);
    const PolicyParams adapted = inner_adapt(ensemble, i, params, env, config, adapt_rng);

    Rng outer_rng = rng.derive(2 * i + 1);
    std::vector<Trajectory> trajs;
    trajs.reserve(config.imaginary_rollouts);
    for (std::size_t j = 0; j < config.imaginary_rollouts; ++j) {
      Rng traj_rng = outer_rng.derive(j);
      const StateVec x0 = env_reset(env, none, traj_rng);
      trajs.push_back(imaginary_rollout(ensemble, i, adapted, env, x0, opt, traj_rng));
    }
    trajs = drop_diverged(std::move(trajs));
    if (trajs.empty())
      throw std::runtime_error("meta step: every model rollout diverged (member " +
                               std::to_string(i) + ")");

    double j_i = 0.0;
    for (const auto& t : trajs)
      j_i += discounted_reg_return(t, 0, config.gamma, config.alpha,
                                   config.regularizer_enabled);
    j_i /= static_cast<double>(trajs.size());

    // first-order meta-gradient: the inner step is treated as constant, so
    // the outer derivative is the score-function gradient at the adapted
    // parameters
    const VecD gi = vpg_gradient(trajs, adapted, config);
    out.objective += j_i;
    for (std::size_t d = 0; d < out.grad.size(); ++d) out.grad[d] += gi[d];
  }

  const double inv_m = 1.0 / static_cast<double>(ensemble.size());
  out.objective *= inv_m;
  for (double& d : out.grad) d *= inv_m;
  return out;
}

VecD trust_region_step(const VecD& params, const VecD& grad, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (params.size() != grad.size())
    throw std::invalid_argument("trust region: size mismatch");
  const double norm_sq = dot_self(grad);
  if (!std::isfinite(norm_sq)) throw std::runtime_error("non-finite meta-gradient");
  if (norm_sq == 0.0) return params;
  const double scale = std::sqrt(2.0 * delta) / std::sqrt(norm_sq);
  VecD out = params;
  for (std::size_t d = 0; d < out.size(); ++d) out[d] += scale * grad[d];
  return out;
}

Trajectory real_rollout(const EnvSpec& env, const TaskPerturbation& pert,
                        const PolicyParams& policy, NoiseSource* noise, bool stochastic,
                        double divergence_bound, Rng& rng) {
  pert.validate();
  Trajectory traj;
  traj.source = TrajSource::kRealEnv;
  traj.member_index = -1;
  if (noise != nullptr) noise->reset();

  StateVec x = env_reset(env, pert, rng);
  VecD prev_mean;
  for (std::size_t k = 0; k < env.horizon; ++k) {
    const double t = x.time;
    const VecD mean_u = mean_action(policy, x.values, t);
    PolicySample sample;
    if (stochastic) {
      std::optional<VecD> eps;
      if (noise != nullptr && policy.kind == PolicyKind::kLinearTimeVarying)
        eps = noise->sample(rng);
      sample = act(policy, x.values, t, eps, rng);
      if (noise != nullptr && policy.kind == PolicyKind::kMlpGaussian) {
        // exploration on top of the squashed sample; such episodes feed model
        // learning only, so the recorded log-prob staying that of the
        // pre-noise sample is fine
        const VecD extra = noise->sample(rng);
        for (std::size_t i = 0; i < sample.action.values.size(); ++i)
          sample.action.values[i] += extra[i];
      }
    } else {
      if (policy.kind == PolicyKind::kMlpGaussian) {
        sample.pre_squash = policy.mean_net.forward(x.values);
      } else {
        sample.pre_squash = mean_u;
      }
      sample.action.values = mean_u;
      sample.action.time = t;
      sample.log_prob = policy_log_prob(policy, x.values, t, sample.pre_squash);
    }
    const VecD u = clamp_action(env, sample.action.values);

    TrajStep step;
    step.state = x.values;
    step.time = t;
    step.action = u;
    step.pre_squash = sample.pre_squash;
    step.log_prob = sample.log_prob;
    step.metrics.feedback_sq = feedback_norm_sq(policy, x.values, t);
    step.metrics.feedforward_sq =
        k == 0 ? 0.0 : feedforward_norm_sq(mean_u, prev_mean, env.dt);
    step.metrics.energy = energy(u);

    ActionVec act_vec;
    act_vec.values = u;
    act_vec.time = t;
    const StepResult res = env_step(env, pert, x, act_vec, rng);
    step.reward = res.reward;
    traj.steps.push_back(std::move(step));
    prev_mean = mean_u;
    x = res.next;

    bool bad = !res.ok;
    if (!bad) {
      for (double v : x.values)
        if (std::fabs(v) > divergence_bound) bad = true;
    }
    if (bad) {
      traj.diverged = true;
      break;
    }
  }
  traj.final_state = x.values;
  traj.final_time = x.time;
  return traj;
}

EvalReport evaluate_policy(const EnvSpec& env, const TaskPerturbation& pert,
                           const PolicyParams& policy, std::size_t episodes,
                           bool deterministic, Rng& rng) {
  if (episodes == 0) throw std::invalid_argument("evaluate_policy needs >= 1 episode");
  EvalReport rep;
  rep.episode_returns.reserve(episodes);
  double fb = 0.0, ff = 0.0, en = 0.0;
  std::size_t steps = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng ep_rng = rng.derive(e);
    const Trajectory traj = real_rollout(env, pert, policy, nullptr, !deterministic,
                                         /*divergence_bound=*/1e6, ep_rng);
    double ret = 0.0, ep_fb = 0.0, ep_ff = 0.0, ep_en = 0.0;
    for (const auto& s : traj.steps) {
      ret += s.reward;
      ep_fb += s.metrics.feedback_sq;
      ep_ff += s.metrics.feedforward_sq;
      ep_en += s.metrics.energy;
    }
    fb += ep_fb;
    ff += ep_ff;
    en += ep_en;
    steps += traj.length();
    const double inv_len =
        traj.length() > 0 ? 1.0 / static_cast<double>(traj.length()) : 0.0;
    rep.episode_returns.push_back(ret);
    rep.episode_feedback.push_back(ep_fb * inv_len);
    rep.episode_feedforward.push_back(ep_ff * inv_len);
    rep.episode_energy.push_back(ep_en * inv_len);
  }
  double mean = 0.0;
  for (double r : rep.episode_returns) mean += r;
  mean /= static_cast<double>(episodes);
  rep.return_mean = mean;
  if (episodes > 1) {
    double var = 0.0;
    for (double r : rep.episode_returns) var += (r - mean) * (r - mean);
    rep.return_std = std::sqrt(var / static_cast<double>(episodes - 1));
  }
  if (steps > 0) {
    rep.feedback_mean = fb / static_cast<double>(steps);
    rep.feedforward_mean = ff / static_cast<double>(steps);
    rep.energy_mean = en / static_cast<double>(steps);
  }
  return rep;
}

EpochReport run_training_epoch(TrainState& state, const MetaConfig& config) {
  config.validate();
  state.env.validate();
  if (state.ensemble.size() != config.ensemble_size)
    throw std::invalid_argument("ensemble size does not match the configuration");
  if (state.train_tasks.empty())
    throw std::invalid_argument("training needs >= 1 task");

  EpochReport report;
  report.epoch = state.epoch;

  const Rng root(state.master_seed);
  const Rng epoch_rng = root.derive(state.epoch);
  const std::size_t members = state.ensemble.size();

  // (a) adapt per member, act on a rotating training task, bank transitions;
  // a failing member is skipped so the epoch can continue on the rest
  double collect_return = 0.0;
  std::size_t collect_episodes = 0;
  for (std::size_t i = 0; i < members; ++i) {
    try {
      Rng adapt_rng = epoch_rng.derive(kTagAdapt + i);
      const PolicyParams behavior =
          inner_adapt(state.ensemble, i, state.policy, state.env, config, adapt_rng);
      const TaskPerturbation& task =
          state.train_tasks[(state.epoch * members + i) % state.train_tasks.size()];
      for (std::size_t j = 0; j < config.trajectories_per_member; ++j) {
        Rng col_rng = epoch_rng.derive(kTagCollect + i * 37 + j);
        NoiseSource noise = state.noise;
        const Trajectory traj =
            real_rollout(state.env, task, behavior, &noise, /*stochastic=*/true,
                         config.divergence_bound, col_rng);
        for (std::size_t k = 0; k < traj.length(); ++k) {
          const VecD& x_next =
              k + 1 < traj.length() ? traj.steps[k + 1].state : traj.final_state;
          if (!all_finite(traj.steps[k].state) || !all_finite(x_next)) continue;
          TransitionRecord rec;
          rec.x_n = traj.steps[k].state;
          rec.u_n = traj.steps[k].action;
          rec.x_next = x_next;
          rec.dt_n = state.env.dt;
          state.buffer.push(std::move(rec));
        }
        for (const auto& s : traj.steps) collect_return += s.reward;
        ++collect_episodes;
      }
    } catch (const std::exception&) {
      report.failed_members += 1;
    }
  }
  if (collect_episodes == 0)
    throw std::runtime_error("every ensemble member failed during collection");
  report.collect_return_mean = collect_return / static_cast<double>(collect_episodes);

  // every member trains on its own bootstrap of the shared pool
  Rng model_rng = epoch_rng.derive(kTagModel);
  const EnsembleTrainReport model_report =
      train_ensemble(state.ensemble, state.buffer, config.model_epochs,
                     config.model_batch_size, config.model_holdout_ratio, model_rng,
                     config.model_max_batches);
  double train_loss = 0.0, holdout_loss = 0.0;
  for (std::size_t i = 0; i < members; ++i) {
    train_loss += model_report.final_train_loss[i];
    holdout_loss += model_report.final_holdout_loss[i];
  }
  report.model_train_loss = train_loss / static_cast<double>(members);
  report.model_holdout_loss = holdout_loss / static_cast<double>(members);

  // (b) meta step
  Rng meta_rng = epoch_rng.derive(kTagMeta);
  const MetaGrad mg =
      meta_objective_grad(state.ensemble, state.policy, state.env, config, meta_rng);
  report.meta_objective = mg.objective;
  report.grad_norm = std::sqrt(dot_self(mg.grad));
  const VecD before = state.policy.get_params();
  const VecD after = trust_region_step(before, mg.grad, config.delta);
  double step_sq = 0.0;
  for (std::size_t d = 0; d < before.size(); ++d) {
    const double diff = after[d] - before[d];
    step_sq += diff * diff;
  }
  report.step_norm = std::sqrt(step_sq);
  state.policy.set_params(after);

  // (c) deterministic progress check on the unperturbed task
  Rng eval_rng = epoch_rng.derive(kTagEval);
  const EvalReport ev = evaluate_policy(state.env, TaskPerturbation{}, state.policy,
                                        config.eval_episodes, /*deterministic=*/true,
                                        eval_rng);
  report.eval_return_mean = ev.return_mean;
  report.eval_return_std = ev.return_std;
  report.eval_feedback_mean = ev.feedback_mean;
  report.eval_feedforward_mean = ev.feedforward_mean;
  report.eval_energy_mean = ev.energy_mean;

  state.epoch += 1;
  return report;
}

MetaTestReport meta_test(const EnvSpec& env, const TaskPerturbation& pert,
                         const PolicyParams& policy, std::size_t adapt_steps,
                         std::size_t adapt_trajectories, const MetaConfig& config,
                         Rng& rng) {
  config.validate();
  pert.validate();
  if (adapt_steps > 0 && adapt_trajectories == 0)
    throw std::invalid_argument("adaptation needs >= 1 trajectory per step");

  MetaTestReport rep;
  // pre and post share one evaluation stream: same initial states, and with
  // adapt_steps = 0 the two evaluations match exactly
  Rng eval_rng_pre = rng.derive(kTagEval);
  rep.pre = evaluate_policy(env, pert, policy, config.eval_episodes,
                            /*deterministic=*/true, eval_rng_pre);

  PolicyParams adapted = policy;
  for (std::size_t s = 0; s < adapt_steps; ++s) {
    Rng col_rng = rng.derive(kTagCollect + s);
    std::vector<Trajectory> trajs;
    trajs.reserve(adapt_trajectories);
    for (std::size_t j = 0; j < adapt_trajectories; ++j) {
      Rng traj_rng = col_rng.derive(j);
      trajs.push_back(real_rollout(env, pert, adapted, nullptr, /*stochastic=*/true,
                                   config.divergence_bound, traj_rng));
    }
    trajs = drop_diverged(std::move(trajs));
    if (trajs.empty())
      throw std::runtime_error("adaptation: every real rollout diverged");
    const VecD grad = vpg_gradient(trajs, adapted, config);
    VecD p = adapted.get_params();
    for (std::size_t d = 0; d < p.size(); ++d) p[d] += config.beta * grad[d];
    adapted.set_params(p);
  }

  Rng eval_rng_post = rng.derive(kTagEval);
  rep.post = evaluate_policy(env, pert, adapted, config.eval_episodes,
                             /*deterministic=*/true, eval_rng_post);
  rep.adapted = std::move(adapted);
  return rep;
}

using nlohmann::json;

namespace {

json env_to_json(const EnvSpec& spec) {
  json j;
  j["env_id"] = env_name(spec.env_id);
  j["dt"] = spec.dt;
  j["horizon"] = spec.horizon;
  j["diffusion_scale"] = spec.diffusion_scale;
  j["action_lo"] = spec.action_lo;
  j["action_hi"] = spec.action_hi;
  return j;
}

EnvSpec env_from_json(const json& j) {
  EnvSpec spec;
  spec.env_id = env_from_name(j.at("env_id").get<std::string>());
  spec.dt = j.at("dt").get<double>();
  spec.horizon = j.at("horizon").get<std::size_t>();
  spec.diffusion_scale = j.at("diffusion_scale").get<double>();
  spec.action_lo = j.at("action_lo").get<VecD>();
  spec.action_hi = j.at("action_hi").get<VecD>();
  spec.validate();
  return spec;
}

json task_to_json(const TaskPerturbation& t) {
  json j;
  j["kind"] = perturbation_name(t.kind);
  j["magnitude"] = t.magnitude;
  return j;
}

TaskPerturbation task_from_json(const json& j) {
  TaskPerturbation t;
  t.kind = perturbation_from_name(j.at("kind").get<std::string>());
  t.magnitude = j.at("magnitude").get<double>();
  t.validate();
  return t;
}

json noise_to_json(const NoiseSource& n) {
  json j;
  j["kind"] = noise_kind_name(n.kind);
  j["theta_ou"] = n.process.theta_ou;
  j["mu"] = n.process.mu;
  j["sigma_eps"] = n.process.sigma_eps;
  j["current"] = n.process.current;
  j["dt"] = n.process.dt;
  return j;
}

NoiseSource noise_from_json(const json& j) {
  NoiseSource n;
  n.kind = noise_kind_from_name(j.at("kind").get<std::string>());
  n.process.theta_ou = j.at("theta_ou").get<double>();
  n.process.mu = j.at("mu").get<VecD>();
  n.process.sigma_eps = j.at("sigma_eps").get<VecD>();
  n.process.current = j.at("current").get<VecD>();
  n.process.dt = j.at("dt").get<double>();
  if (n.kind != NoiseKind::kNone) n.process.validate();
  return n;
}

}  // namespace

std::string train_state_to_json(const TrainState& state) {
  json j;
  j["schema"] = "mbmrl-train-state-v1";
  j["master_seed"] = state.master_seed;
  j["epoch"] = state.epoch;
  j["env"] = env_to_json(state.env);
  json tasks = json::array();
  for (const auto& t : state.train_tasks) tasks.push_back(task_to_json(t));
  j["train_tasks"] = std::move(tasks);
  j["policy"] = json::parse(policy_to_json(state.policy));
  j["ensemble"] = json::parse(ensemble_to_json(state.ensemble));
  j["noise"] = noise_to_json(state.noise);
  json buf;
  buf["capacity"] = state.buffer.capacity();
  json records = json::array();
  for (std::size_t i = 0; i < state.buffer.size(); ++i) {
    const TransitionRecord& r = state.buffer.at(i);
    json rec;
    rec["x"] = r.x_n;
    rec["u"] = r.u_n;
    rec["xn"] = r.x_next;
    rec["dt"] = r.dt_n;
    records.push_back(std::move(rec));
  }
  buf["records"] = std::move(records);
  j["buffer"] = std::move(buf);
  return j.dump(2);
}

TrainState train_state_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "mbmrl-train-state-v1")
    throw std::invalid_argument("unrecognized training-state schema");
  TrainState state;
  state.master_seed = j.at("master_seed").get<std::uint64_t>();
  state.epoch = j.at("epoch").get<std::size_t>();
  state.env = env_from_json(j.at("env"));
  for (const auto& t : j.at("train_tasks")) state.train_tasks.push_back(task_from_json(t));
  state.policy = policy_from_json(j.at("policy").dump());
  state.ensemble = ensemble_from_json(j.at("ensemble").dump());
  state.noise = noise_from_json(j.at("noise"));
  const json& buf = j.at("buffer");
  state.buffer = ReplayBuffer(buf.at("capacity").get<std::size_t>());
  for (const auto& rec : buf.at("records")) {
    TransitionRecord r;
    r.x_n = rec.at("x").get<VecD>();
    r.u_n = rec.at("u").get<VecD>();
    r.x_next = rec.at("xn").get<VecD>();
    r.dt_n = rec.at("dt").get<double>();
    state.buffer.push(std::move(r));
  }
  return state;
}

}  // namespace mbmrl
