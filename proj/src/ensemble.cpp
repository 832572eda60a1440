#include "mbmrl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mbmrl/attention.hpp"
#include "mbmrl/serialize.hpp"

namespace mbmrl {

namespace {

constexpr double kStdFloor = 1e-8;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
}

void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
}

VecD model_input(const VecD& x, const VecD& u) {
  VecD in;
  in.reserve(x.size() + u.size());
  in.insert(in.end(), x.begin(), x.end());
  in.insert(in.end(), u.begin(), u.end());
  return in;
}

}  // namespace

void Normalizer::fit(const std::vector<VecD>& rows) {
  if (rows.empty()) throw std::invalid_argument("normalizer fit on empty data");
  const std::size_t dim = rows[0].size();
  mean.assign(dim, 0.0);
  std.assign(dim, 0.0);
  for (const VecD& r : rows)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += r[d];
  for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(rows.size());
  for (const VecD& r : rows)
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = r[d] - mean[d];
      std[d] += c * c;
    }
  for (std::size_t d = 0; d < dim; ++d) {
    std[d] = std::sqrt(std[d] / static_cast<double>(rows.size()));
    if (std[d] < kStdFloor) std[d] = kStdFloor;
  }
}

VecD Normalizer::normalize(const VecD& v) const {
  VecD out(v.size());
  for (std::size_t d = 0; d < v.size(); ++d) out[d] = (v[d] - mean[d]) / std[d];
  return out;
}

VecD Normalizer::denormalize(const VecD& v) const {
  VecD out(v.size());
  for (std::size_t d = 0; d < v.size(); ++d) out[d] = v[d] * std[d] + mean[d];
  return out;
}

DynamicsEnsemble make_ensemble(std::size_t state_dim, std::size_t action_dim,
                               std::size_t members, std::size_t elite_count,
                               const std::vector<std::size_t>& hidden,
                               Activation activation, double learning_rate, Rng& rng) {
  if (members < 1) throw std::invalid_argument("ensemble needs >= 1 member");
  DynamicsEnsemble e;
  e.state_dim = state_dim;
  e.action_dim = action_dim;
  e.elite_count = std::min(elite_count, members);
  std::vector<std::size_t> sizes = {state_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(state_dim);
  for (std::size_t m = 0; m < members; ++m) {
    MlpNetwork net(sizes, activation, Activation::kIdentity);
    Rng stream = rng.derive(7000 + m);
    net.init_random(stream);
    e.optimizers.emplace_back(net.param_count(), learning_rate);
    e.members.push_back(std::move(net));
  }
  e.holdout_losses.assign(members, std::numeric_limits<double>::infinity());
  e.elite_flags.assign(members, 0);
  e.reinit_flags.assign(members, 0);
  e.input_norm.mean.assign(state_dim + action_dim, 0.0);
  e.input_norm.std.assign(state_dim + action_dim, 1.0);
  e.target_norm.mean.assign(state_dim, 0.0);
  e.target_norm.std.assign(state_dim, 1.0);
  return e;
}

VecD finite_diff_target(const TransitionRecord& record) {
  if (!(record.dt_n > 0.0)) throw std::invalid_argument("transition dt must be > 0");
  VecD t(record.x_n.size());
  for (std::size_t d = 0; d < t.size(); ++d)
    t[d] = (record.x_next[d] - record.x_n[d]) / record.dt_n;
  return t;
}

EnsembleTrainReport train_ensemble(DynamicsEnsemble& ensemble, const ReplayBuffer& buffer,
                                   std::size_t epochs, std::size_t batch_size,
                                   double holdout_ratio, Rng& rng,
                                   std::size_t max_batches_per_epoch) {
  if (!(holdout_ratio > 0.0 && holdout_ratio < 1.0))
    throw std::invalid_argument("holdout_ratio must be in (0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const std::size_t n = buffer.size();
  const std::size_t holdout_count = std::max<std::size_t>(1, static_cast<std::size_t>(
                                        holdout_ratio * static_cast<double>(n)));
  if (n < 2 || holdout_count >= n)
    throw std::invalid_argument("not enough transitions to split train/holdout");
  const std::size_t train_count = n - holdout_count;

  // precompute inputs/targets once
  std::vector<VecD> inputs(n), targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TransitionRecord& r = buffer.at(i);
    inputs[i] = model_input(r.x_n, r.u_n);
    targets[i] = finite_diff_target(r);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = rng.derive(11);
  fisher_yates(order, split_rng);
  const std::vector<std::size_t> holdout_idx(order.begin(), order.begin() + holdout_count);
  const std::vector<std::size_t> train_idx(order.begin() + holdout_count, order.end());

  {
    std::vector<VecD> train_in, train_tg;
    train_in.reserve(train_count);
    train_tg.reserve(train_count);
    for (std::size_t i : train_idx) {
      train_in.push_back(inputs[i]);
      train_tg.push_back(targets[i]);
    }
    ensemble.input_norm.fit(train_in);
    ensemble.target_norm.fit(train_tg);
    ensemble.normalizers_ready = true;
  }

  // normalized copies used by the inner loops
  std::vector<VecD> in_n(n), tg_n(n);
  for (std::size_t i = 0; i < n; ++i) {
    in_n[i] = ensemble.input_norm.normalize(inputs[i]);
    tg_n[i] = ensemble.target_norm.normalize(targets[i]);
  }
  // raw-unit loss = sum_d (std_d * normalized_err_d)^2
  VecD var_scale(ensemble.state_dim);
  for (std::size_t d = 0; d < ensemble.state_dim; ++d)
    var_scale[d] = ensemble.target_norm.std[d] * ensemble.target_norm.std[d];

  EnsembleTrainReport report;
  report.loss_history.assign(ensemble.size(), VecD());
  report.final_train_loss.assign(ensemble.size(), 0.0);
  report.final_holdout_loss.assign(ensemble.size(), 0.0);

  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    Rng member_rng = rng.derive(100 + m);
    MlpNetwork& net = ensemble.members[m];
    AdamState& opt = ensemble.optimizers[m];

    std::vector<std::size_t> boot(train_count);
    for (std::size_t i = 0; i < train_count; ++i)
      boot[i] = train_idx[uniform_index(member_rng, train_count)];

    VecD params = net.get_params();
    for (std::size_t e = 0; e < epochs; ++e) {
      fisher_yates(boot, member_rng);
      const std::size_t bs = std::min(batch_size, train_count);
      std::size_t batches = (train_count + bs - 1) / bs;
      if (max_batches_per_epoch > 0) batches = std::min(batches, max_batches_per_epoch);
      double epoch_loss = 0.0;
      for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * bs;
        const std::size_t hi = std::min(lo + bs, train_count);
        const double inv = 1.0 / static_cast<double>(hi - lo);
        VecD grad(net.param_count(), 0.0);
        double batch_loss = 0.0;
        for (std::size_t s = lo; s < hi; ++s) {
          const std::size_t i = boot[s];
          const VecD pred = net.forward(in_n[i]);
          VecD upstream(ensemble.state_dim);
          for (std::size_t d = 0; d < ensemble.state_dim; ++d) {
            const double err = pred[d] - tg_n[i][d];
            batch_loss += var_scale[d] * err * err;
            upstream[d] = 2.0 * err * inv;
          }
          const VecD g = net.backward_params(in_n[i], upstream);
          axpy(1.0, g, grad);
        }
        batch_loss *= inv;
        if (!std::isfinite(batch_loss) || !all_finite(grad)) {
          // bad member state: reinitialize and keep going
          Rng reinit = member_rng.derive(999);
          net.init_random(reinit);
          params = net.get_params();
          opt = AdamState(net.param_count(), opt.learning_rate);
          ensemble.reinit_flags[m] = 1;
          epoch_loss = std::numeric_limits<double>::quiet_NaN();
          break;
        }
        adam_step(params, grad, opt);
        net.set_params(params);
        epoch_loss += batch_loss;
      }
      if (std::isfinite(epoch_loss)) epoch_loss /= static_cast<double>(batches);
      report.loss_history[m].push_back(epoch_loss);
    }

    // raw-unit training loss over the member's bootstrap after training
    double train_loss = 0.0;
    for (std::size_t s = 0; s < train_count; ++s) {
      const std::size_t i = boot[s];
      const VecD pred = net.forward(in_n[i]);
      for (std::size_t d = 0; d < ensemble.state_dim; ++d) {
        const double err = pred[d] - tg_n[i][d];
        train_loss += var_scale[d] * err * err;
      }
    }
    report.final_train_loss[m] = train_loss / static_cast<double>(train_count);

    double holdout_loss = 0.0;
    for (std::size_t i : holdout_idx) {
      const VecD pred = net.forward(in_n[i]);
      for (std::size_t d = 0; d < ensemble.state_dim; ++d) {
        const double err = pred[d] - tg_n[i][d];
        holdout_loss += var_scale[d] * err * err;
      }
    }
    report.final_holdout_loss[m] = holdout_loss / static_cast<double>(holdout_count);
    ensemble.holdout_losses[m] = report.final_holdout_loss[m];
  }

  // elite refresh: smallest holdout losses win, ties broken by index
  std::vector<std::size_t> rank(ensemble.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return ensemble.holdout_losses[a] < ensemble.holdout_losses[b];
  });
  std::fill(ensemble.elite_flags.begin(), ensemble.elite_flags.end(), 0);
  for (std::size_t i = 0; i < ensemble.elite_count; ++i) ensemble.elite_flags[rank[i]] = 1;

  return report;
}

VecD predict(const DynamicsEnsemble& ensemble, std::size_t member_index, const VecD& x,
             const VecD& u) {
  if (member_index >= ensemble.size())
    throw std::out_of_range("ensemble member index out of range");
  const VecD in = ensemble.input_norm.normalize(model_input(x, u));
  const VecD out = ensemble.members[member_index].forward(in);
  return ensemble.target_norm.denormalize(out);
}

Trajectory imaginary_rollout(const DynamicsEnsemble& ensemble, std::size_t member_index,
                             const PolicyParams& policy, const EnvSpec& env,
                             const StateVec& initial_state, const RolloutOptions& options,
                             Rng& rng) {
  Trajectory traj;
  traj.source = TrajSource::kModel;
  traj.member_index = static_cast<int>(member_index);

  StateVec x = initial_state;
  VecD prev_mean;
  for (std::size_t k = 0; k < options.horizon; ++k) {
    const double t = x.time;
    PolicySample sample;
    if (options.stochastic_policy) {
      sample = act(policy, x.values, t, std::nullopt, rng);
    } else {
      // deterministic evaluation sample: pre-squash record at the mean
      if (policy.kind == PolicyKind::kMlpGaussian) {
        sample.pre_squash = policy.mean_net.forward(x.values);
      } else {
        sample.pre_squash = mean_action(policy, x.values, t);
      }
      sample.action.values = mean_action(policy, x.values, t);
      sample.action.time = t;
      sample.log_prob = policy_log_prob(policy, x.values, t, sample.pre_squash);
    }

    TrajStep step;
    step.state = x.values;
    step.time = t;
    step.action = sample.action.values;
    step.pre_squash = sample.pre_squash;
    step.log_prob = sample.log_prob;
    step.reward = env_reward(env, x.values, sample.action.values);
    const VecD mean_u = options.stochastic_policy
                            ? mean_action(policy, x.values, t)
                            : sample.action.values;
    step.metrics.feedback_sq = feedback_norm_sq(policy, x.values, t);
    step.metrics.feedforward_sq =
        k == 0 ? 0.0 : feedforward_norm_sq(mean_u, prev_mean, options.dt);
    step.metrics.energy = energy(sample.action.values);
    traj.steps.push_back(std::move(step));
    prev_mean = mean_u;

    const VecD deriv = predict(ensemble, member_index, x.values, sample.action.values);
    for (std::size_t d = 0; d < x.values.size(); ++d)
      x.values[d] += deriv[d] * options.dt;
    x.time += options.dt;

    bool bad = !all_finite(x.values);
    if (!bad) {
      for (double v : x.values)
        if (std::fabs(v) > options.divergence_bound) bad = true;
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

std::string ensemble_to_json(const DynamicsEnsemble& ensemble) {
  using nlohmann::json;
  json j;
  j["state_dim"] = ensemble.state_dim;
  j["action_dim"] = ensemble.action_dim;
  j["elite_count"] = ensemble.elite_count;
  json members = json::array();
  for (const auto& m : ensemble.members) members.push_back(net_to_json(m));
  j["members"] = std::move(members);
  json opts = json::array();
  for (const auto& o : ensemble.optimizers) opts.push_back(adam_to_json(o));
  j["optimizers"] = std::move(opts);
  j["holdout_losses"] = ensemble.holdout_losses;
  j["elite_flags"] = std::vector<int>(ensemble.elite_flags.begin(), ensemble.elite_flags.end());
  j["reinit_flags"] = std::vector<int>(ensemble.reinit_flags.begin(), ensemble.reinit_flags.end());
  j["input_norm"] = json{{"mean", ensemble.input_norm.mean}, {"std", ensemble.input_norm.std}};
  j["target_norm"] = json{{"mean", ensemble.target_norm.mean}, {"std", ensemble.target_norm.std}};
  j["normalizers_ready"] = ensemble.normalizers_ready;
  return j.dump(2);
}

DynamicsEnsemble ensemble_from_json(const std::string& text) {
  using nlohmann::json;
  const json j = json::parse(text);
  DynamicsEnsemble e;
  e.state_dim = j.at("state_dim").get<std::size_t>();
  e.action_dim = j.at("action_dim").get<std::size_t>();
  e.elite_count = j.at("elite_count").get<std::size_t>();
  for (const auto& m : j.at("members")) e.members.push_back(net_from_json(m));
  for (const auto& o : j.at("optimizers")) e.optimizers.push_back(adam_from_json(o));
  e.holdout_losses = j.at("holdout_losses").get<VecD>();
  for (int f : j.at("elite_flags").get<std::vector<int>>())
    e.elite_flags.push_back(static_cast<char>(f));
  for (int f : j.at("reinit_flags").get<std::vector<int>>())
    e.reinit_flags.push_back(static_cast<char>(f));
  e.input_norm.mean = j.at("input_norm").at("mean").get<VecD>();
  e.input_norm.std = j.at("input_norm").at("std").get<VecD>();
  e.target_norm.mean = j.at("target_norm").at("mean").get<VecD>();
  e.target_norm.std = j.at("target_norm").at("std").get<VecD>();
  e.normalizers_ready = j.at("normalizers_ready").get<bool>();
  if (e.members.size() != e.optimizers.size() ||
      e.members.size() != e.holdout_losses.size() ||
      e.members.size() != e.elite_flags.size())
    throw std::invalid_argument("inconsistent ensemble checkpoint");
  return e;
}

}  // namespace mbmrl
