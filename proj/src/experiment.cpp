#include "mbmrl/experiment.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mbmrl/attention.hpp"

namespace mbmrl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// run-level stream tags; epoch indices occupy the low range, so these stay
// clear of them by a wide margin
constexpr std::uint64_t kTagPolicyInit = 1000001;
constexpr std::uint64_t kTagEnsembleInit = 1000002;
constexpr std::uint64_t kTagFinalEval = 1000003;
constexpr std::uint64_t kTagMetaTest = 1000100;  // + test-task index
constexpr std::uint64_t kTagHeatmap = 1000200;

std::string seed_dir_path(const std::string& out_dir, std::uint64_t seed) {
  return out_dir + "/seed_" + std::to_string(seed);
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

TrainState make_train_state(const ExperimentConfig& config, std::uint64_t seed) {
  TrainState st;
  st.env = config.env;
  st.train_tasks = config.train_tasks;
  st.master_seed = seed;
  st.epoch = 0;

  const Rng root(seed);
  Rng policy_rng = root.derive(kTagPolicyInit);
  if (config.policy.kind == PolicyKind::kMlpGaussian) {
    st.policy = make_mlp_policy(st.env.state_dim(), st.env.action_dim(),
                                st.env.action_lo, st.env.action_hi, config.policy.hidden,
                                config.policy.activation, config.policy.log_std_init,
                                policy_rng);
  } else {
    st.policy = make_linear_policy(st.env.state_dim(), st.env.action_dim(),
                                   st.env.action_lo, st.env.action_hi,
                                   config.policy.knots, config.policy.knot_duration,
                                   config.policy.log_std_init);
  }
  Rng ens_rng = root.derive(kTagEnsembleInit);
  st.ensemble = make_ensemble(st.env.state_dim(), st.env.action_dim(),
                              config.meta.ensemble_size, config.meta.elite_count,
                              config.dynamics.hidden, config.dynamics.activation,
                              config.dynamics.learning_rate, ens_rng);
  st.buffer = ReplayBuffer(config.dynamics.buffer_capacity);
  st.noise = make_noise_source(config.noise.kind, st.env.action_dim(), config.noise.theta,
                               config.noise.sigma, config.noise.mu, st.env.dt);
  return st;
}

SeedOutcome run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                         const std::string& seed_dir) {
  SeedOutcome out;
  out.seed = seed;
  try {
    fs::create_directories(seed_dir);
    const std::string ckpt_path = seed_dir + "/checkpoint.json";
    TrainState st;
    bool resumed = false;
    if (config.run.checkpoint_every > 0 && fs::exists(ckpt_path)) {
      const json j = json::parse(read_text_file(ckpt_path));
      TrainState loaded = train_state_from_json(j.at("state").dump());
      if (loaded.master_seed == seed) {  // stale checkpoints are ignored
        st = std::move(loaded);
        out.reports = epochs_from_csv(CsvTable::parse(j.at("epochs_csv").get<std::string>()));
        resumed = true;
      }
    }
    if (!resumed) st = make_train_state(config, seed);

    while (st.epoch < config.meta.epochs) {
      out.reports.push_back(run_training_epoch(st, config.meta));
      const std::size_t k = config.run.checkpoint_every;
      if (k > 0 && st.epoch % k == 0 && st.epoch < config.meta.epochs) {
        json j;
        j["state"] = json::parse(train_state_to_json(st));
        j["epochs_csv"] = epochs_to_csv(out.reports).serialize();
        write_text_file(ckpt_path, j.dump(2));
      }
    }

    write_text_file(seed_dir + "/epochs.csv", epochs_to_csv(out.reports).serialize());
    write_text_file(seed_dir + "/policy.json", policy_to_json(st.policy));

    Rng eval_rng = Rng(seed).derive(kTagFinalEval);
    out.final_eval = evaluate_policy(st.env, TaskPerturbation{}, st.policy,
                                     config.meta.eval_episodes, /*deterministic=*/true,
                                     eval_rng);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::string& out_dir = config.run.out_dir;
  fs::create_directories(out_dir);
  write_text_file(out_dir + "/config.json", config_to_json(config));

  const auto& seeds = config.run.seeds;
  ExperimentResult result;
  result.outcomes.resize(seeds.size());

  const std::size_t workers = std::min<std::size_t>(config.run.workers, seeds.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      result.outcomes[i] =
          run_one_seed(config, seeds[i], seed_dir_path(out_dir, seeds[i]));
  } else {
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) break;
        result.outcomes[i] =
            run_one_seed(config, seeds[i], seed_dir_path(out_dir, seeds[i]));
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // merged artifacts, always in config seed order
  std::vector<std::uint64_t> ok_seeds;
  std::vector<EvalReport> ok_evals;
  std::vector<std::vector<EpochReport>> ok_reports;
  json failures = json::array();
  for (const auto& o : result.outcomes) {
    if (o.ok) {
      ok_seeds.push_back(o.seed);
      ok_evals.push_back(o.final_eval);
      ok_reports.push_back(o.reports);
    } else {
      failures.push_back({{"seed", o.seed}, {"error", o.error}});
      std::cerr << "seed " << o.seed << " failed: " << o.error << '\n';
    }
  }

  const CsvTable episodes = episode_table(ok_seeds, ok_evals);
  write_text_file(out_dir + "/episodes.csv", episodes.serialize());
  write_text_file(out_dir + "/summary.json", summary_from_episode_table(episodes));
  if (config.run.emit_curves) {
    const auto curve = learning_curves(ok_reports);
    write_text_file(out_dir + "/curves.csv", curves_to_csv(curve).serialize());
    write_text_file(out_dir + "/curves.svg",
                    curves_to_svg(curve, "training return (" +
                                             std::string(env_name(config.env.env_id)) +
                                             ")"));
  }
  json rr;
  rr["seeds_ok"] = ok_seeds;
  rr["seeds_failed"] = std::move(failures);
  rr["epochs"] = config.meta.epochs;
  write_text_file(out_dir + "/run_report.json", rr.dump(2));

  result.exit_code = ok_seeds.empty() && !seeds.empty() ? 1 : 0;
  return result;
}

int run_meta_test(const ExperimentConfig& config) {
  config.validate();
  if (config.test_tasks.empty())
    throw ConfigError("config: tasks.test must not be empty for meta-test");
  const std::string& out_dir = config.run.out_dir;

  CsvTable t;
  t.header = {"seed",          "task",          "magnitude",     "pre_return_mean",
              "pre_return_std", "post_return_mean", "post_return_std", "pre_feedback",
              "post_feedback", "pre_feedforward", "post_feedforward", "pre_energy",
              "post_energy"};
  std::size_t seeds_ok = 0;
  for (std::uint64_t seed : config.run.seeds) {
    const std::string policy_path = seed_dir_path(out_dir, seed) + "/policy.json";
    PolicyParams policy;
    try {
      policy = policy_from_json(read_text_file(policy_path));
    } catch (const std::exception& e) {
      std::cerr << "seed " << seed << ": no usable policy (" << e.what() << ")\n";
      continue;
    }
    for (std::size_t ti = 0; ti < config.test_tasks.size(); ++ti) {
      const TaskPerturbation& task = config.test_tasks[ti];
      Rng mt_rng = Rng(seed).derive(kTagMetaTest + ti);
      const MetaTestReport rep =
          meta_test(config.env, task, policy, config.eval_adapt_steps,
                    config.eval_adapt_trajectories, config.meta, mt_rng);
      t.rows.push_back({std::to_string(seed), perturbation_name(task.kind),
                        format_double(task.magnitude),
                        format_double(rep.pre.return_mean),
                        format_double(rep.pre.return_std),
                        format_double(rep.post.return_mean),
                        format_double(rep.post.return_std),
                        format_double(rep.pre.feedback_mean),
                        format_double(rep.post.feedback_mean),
                        format_double(rep.pre.feedforward_mean),
                        format_double(rep.post.feedforward_mean),
                        format_double(rep.pre.energy_mean),
                        format_double(rep.post.energy_mean)});
    }
    ++seeds_ok;
  }
  write_text_file(out_dir + "/meta_test.csv", t.serialize());
  return seeds_ok == 0 ? 1 : 0;
}

int run_ablation(const ExperimentConfig& config) {
  config.validate();
  const std::string& out_dir = config.run.out_dir;
  fs::create_directories(out_dir);

  CsvTable t;
  t.header = {"axis",         "value",        "episodes",        "return_mean",
              "return_std",   "feedback_mean", "feedback_std",   "feedforward_mean",
              "feedforward_std", "energy_mean", "energy_std"};
  const char* axis = ablation_axis_name(config.ablation.axis);
  std::size_t arms_ok = 0;
  for (double v : config.ablation.values) {
    ExperimentConfig arm = config;
    switch (config.ablation.axis) {
      case AblationAxis::kAlpha: arm.meta.alpha = v; break;
      case AblationAxis::kEnsembleSize:
        arm.meta.ensemble_size = static_cast<std::size_t>(v);
        arm.meta.elite_count = std::min(arm.meta.elite_count, arm.meta.ensemble_size);
        break;
      case AblationAxis::kImaginaryN:
        arm.meta.imaginary_rollouts = static_cast<std::size_t>(v);
        break;
    }
    arm.run.out_dir = out_dir + "/" + axis + "_" + format_double(v);
    try {
      const ExperimentResult res = run_experiment(arm);
      if (res.exit_code != 0) throw std::runtime_error("all seeds failed");
      const json summary = json::parse(read_text_file(arm.run.out_dir + "/summary.json"));
      t.rows.push_back(
          {axis, format_double(v), std::to_string(summary.at("episodes").get<std::size_t>()),
           format_double(summary.at("return").at("mean").get<double>()),
           format_double(summary.at("return").at("std").get<double>()),
           format_double(summary.at("feedback").at("mean").get<double>()),
           format_double(summary.at("feedback").at("std").get<double>()),
           format_double(summary.at("feedforward").at("mean").get<double>()),
           format_double(summary.at("feedforward").at("std").get<double>()),
           format_double(summary.at("energy").at("mean").get<double>()),
           format_double(summary.at("energy").at("std").get<double>())});
      ++arms_ok;
    } catch (const std::exception& e) {
      std::cerr << axis << " = " << format_double(v) << " failed: " << e.what() << '\n';
    }
  }
  write_text_file(out_dir + "/ablation.csv", t.serialize());
  return arms_ok == 0 ? 1 : 0;
}

HeatmapGrid build_heatmap(const ExperimentConfig& config, const PolicyParams& policy,
                          std::uint64_t seed) {
  const HeatmapConfig& h = config.heatmap;
  HeatmapGrid grid;
  grid.dim_x = h.dim_x;
  grid.dim_y = h.dim_y;
  grid.bins_x = h.bins_x;
  grid.bins_y = h.bins_y;
  grid.min_x = h.min_x;
  grid.max_x = h.max_x;
  grid.min_y = h.min_y;
  grid.max_y = h.max_y;
  grid.init_cells();

  // visited states from deterministic episodes on the unperturbed task
  Rng root(seed);
  Rng hm_rng = root.derive(kTagHeatmap);
  std::vector<Trajectory> trajs;
  for (std::size_t e = 0; e < config.meta.eval_episodes; ++e) {
    Rng ep_rng = hm_rng.derive(e);
    trajs.push_back(real_rollout(config.env, TaskPerturbation{}, policy, nullptr,
                                 /*stochastic=*/false, 1e6, ep_rng));
  }

  if (h.source == HeatmapSource::kUniformGrid) {
    // cell centers on the projection; other dimensions pinned at the mean of
    // the visited states
    VecD base(config.env.state_dim(), 0.0);
    std::size_t n = 0;
    for (const auto& traj : trajs)
      for (const auto& s : traj.steps) {
        for (std::size_t d = 0; d < base.size(); ++d) base[d] += s.state[d];
        ++n;
      }
    if (n > 0)
      for (double& b : base) b /= static_cast<double>(n);
    for (std::size_t iy = 0; iy < grid.bins_y; ++iy) {
      for (std::size_t ix = 0; ix < grid.bins_x; ++ix) {
        VecD x = base;
        x[grid.dim_x] = grid.center_x(ix);
        x[grid.dim_y] = grid.center_y(iy);
        double metric;
        if (h.metric == HeatmapMetric::kFeedback) {
          metric = feedback_norm_sq(policy, x, 0.0);
        } else {
          // schedule differencing at a frozen state
          metric = feedforward_norm_sq(mean_action(policy, x, config.env.dt),
                                       mean_action(policy, x, 0.0), config.env.dt);
        }
        const std::size_t c = grid.index(ix, iy);
        grid.value[c] = metric;
        grid.count[c] = 1;
      }
    }
    return grid;
  }

  // visited_states: bin the per-step metrics of the episodes
  const double wx = (grid.max_x - grid.min_x) / static_cast<double>(grid.bins_x);
  const double wy = (grid.max_y - grid.min_y) / static_cast<double>(grid.bins_y);
  for (const auto& traj : trajs) {
    for (const auto& s : traj.steps) {
      const double vx = s.state[grid.dim_x];
      const double vy = s.state[grid.dim_y];
      if (vx < grid.min_x || vx >= grid.max_x || vy < grid.min_y || vy >= grid.max_y)
        continue;
      const std::size_t ix = static_cast<std::size_t>((vx - grid.min_x) / wx);
      const std::size_t iy = static_cast<std::size_t>((vy - grid.min_y) / wy);
      const std::size_t c = grid.index(std::min(ix, grid.bins_x - 1),
                                       std::min(iy, grid.bins_y - 1));
      const double metric = h.metric == HeatmapMetric::kFeedback ? s.metrics.feedback_sq
                                                                 : s.metrics.feedforward_sq;
      grid.value[c] += metric;
      grid.count[c] += 1;
    }
  }
  for (std::size_t c = 0; c < grid.value.size(); ++c)
    if (grid.count[c] > 0) grid.value[c] /= static_cast<double>(grid.count[c]);
  return grid;
}

int run_heatmap(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const std::string& out_dir = config.run.out_dir;
  const PolicyParams policy =
      policy_from_json(read_text_file(seed_dir_path(out_dir, seed) + "/policy.json"));
  const HeatmapGrid grid = build_heatmap(config, policy, seed);
  const std::string title = std::string(heatmap_metric_name(config.heatmap.metric)) +
                            " norm, " + env_name(config.env.env_id);
  write_text_file(out_dir + "/heatmap.csv", heatmap_to_csv(grid));
  write_text_file(out_dir + "/heatmap.svg", heatmap_to_svg(grid, title));
  return 0;
}

int run_curves(const ExperimentConfig& config) {
  config.validate();
  const std::string& out_dir = config.run.out_dir;
  std::vector<std::vector<EpochReport>> per_seed;
  for (std::uint64_t seed : config.run.seeds) {
    const std::string path = seed_dir_path(out_dir, seed) + "/epochs.csv";
    if (!fs::exists(path)) {
      std::cerr << "missing " << path << ", skipping seed " << seed << '\n';
      continue;
    }
    per_seed.push_back(epochs_from_csv(CsvTable::parse(read_text_file(path))));
  }
  if (per_seed.empty()) return 1;
  const auto curve = learning_curves(per_seed);
  write_text_file(out_dir + "/curves.csv", curves_to_csv(curve).serialize());
  write_text_file(out_dir + "/curves.svg",
                  curves_to_svg(curve, "training return (" +
                                           std::string(env_name(config.env.env_id)) +
                                           ")"));
  return 0;
}

}  // namespace mbmrl
