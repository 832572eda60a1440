#ifndef MBMRL_EXPERIMENT_HPP_
#define MBMRL_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mbmrl/config.hpp"
#include "mbmrl/meta.hpp"
#include "mbmrl/report.hpp"

namespace mbmrl {

// fresh training state for one seed; every stream inside the run is derived
// from this seed, so a (config, seed) pair fixes the whole run
TrainState make_train_state(const ExperimentConfig& config, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when ok = false
  std::vector<EpochReport> reports;
  EvalReport final_eval;
};

// One full training run in <out_dir>/seed_<seed>/: epochs.csv, policy.json,
// and (if configured) periodic checkpoint.json files a rerun resumes from.
SeedOutcome run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                         const std::string& seed_dir);

struct ExperimentResult {
  int exit_code = 0;  // 0 unless every seed failed (1)
  std::vector<SeedOutcome> outcomes;  // in config seed order
};

// All seeds (in parallel when run.workers > 1; outputs are identical either
// way), then the merged artifacts: config.json, episodes.csv, summary.json,
// run_report.json, and curves.csv/curves.svg when enabled.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Loads each seed's trained policy from <out_dir>, evaluates pre/post
// adaptation on every test task, writes meta_test.csv. Uses
// config.eval_adapt_steps inner steps of config.eval_adapt_trajectories
// real episodes each.
int run_meta_test(const ExperimentConfig& config);

// One run_experiment per axis value in <out_dir>/<axis>_<value>/ plus the
// joined ablation.csv comparison. Per-value failures are isolated.
int run_ablation(const ExperimentConfig& config);

// Builds the configured heatmap for one seed's trained policy and writes
// heatmap.csv / heatmap.svg into the run directory.
int run_heatmap(const ExperimentConfig& config, std::uint64_t seed);
HeatmapGrid build_heatmap(const ExperimentConfig& config, const PolicyParams& policy,
                          std::uint64_t seed);

// Re-emits curves.csv / curves.svg from the per-seed epochs.csv files.
int run_curves(const ExperimentConfig& config);

// small file helpers shared by the CLI
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mbmrl

#endif  // MBMRL_EXPERIMENT_HPP_
