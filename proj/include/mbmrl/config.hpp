#ifndef MBMRL_CONFIG_HPP_
#define MBMRL_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbmrl/env.hpp"
#include "mbmrl/meta.hpp"
#include "mbmrl/mlp.hpp"
#include "mbmrl/noise.hpp"
#include "mbmrl/policy.hpp"

namespace mbmrl {

// A bad or unknown config entry. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

constexpr const char* kConfigSchema = "mbmrl-config-v1";

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kMlpGaussian;
  std::vector<std::size_t> hidden = {32, 32};
  Activation activation = Activation::kTanh;
  double log_std_init = -0.5;
  std::size_t knots = 5;       // linear kind only
  double knot_duration = 4.0;  // linear kind only
};

struct DynamicsConfig {
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::kSwish;
  double learning_rate = 1e-3;
  std::size_t buffer_capacity = 100000;
};

struct NoiseConfig {
  NoiseKind kind = NoiseKind::kOu;
  double theta = 0.15;
  double sigma = 0.3;
  double mu = 0.0;
};

enum class HeatmapSource { kVisitedStates, kUniformGrid };
enum class HeatmapMetric { kFeedback, kFeedforward };

const char* heatmap_source_name(HeatmapSource s);
HeatmapSource heatmap_source_from_name(const std::string& name);
const char* heatmap_metric_name(HeatmapMetric m);
HeatmapMetric heatmap_metric_from_name(const std::string& name);

struct HeatmapConfig {
  std::size_t dim_x = 0, dim_y = 1;
  std::size_t bins_x = 20, bins_y = 20;
  double min_x = -3.2, max_x = 3.2;
  double min_y = -8.0, max_y = 8.0;
  HeatmapSource source = HeatmapSource::kUniformGrid;
  HeatmapMetric metric = HeatmapMetric::kFeedback;
};

struct RunConfig {
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "runs/out";
  std::size_t workers = 1;           // parallel seed jobs
  std::size_t checkpoint_every = 0;  // epochs; 0 disables checkpoints
  bool emit_curves = true;
};

enum class AblationAxis { kAlpha, kEnsembleSize, kImaginaryN };

const char* ablation_axis_name(AblationAxis a);
AblationAxis ablation_axis_from_name(const std::string& name);

struct AblationConfig {
  AblationAxis axis = AblationAxis::kAlpha;
  VecD values = {0.0, 1.0};  // integer axes require whole values >= 1
};

struct ExperimentConfig {
  EnvSpec env = make_env_spec(EnvId::kPendulumSwingup);
  NoiseConfig noise;
  PolicyConfig policy;
  DynamicsConfig dynamics;
  MetaConfig meta;
  std::vector<TaskPerturbation> train_tasks;  // empty -> default_train_tasks()
  std::vector<TaskPerturbation> test_tasks;
  RunConfig run;
  HeatmapConfig heatmap;
  AblationConfig ablation;
  std::size_t eval_adapt_steps = 1;         // meta-test inner steps
  std::size_t eval_adapt_trajectories = 8;  // real episodes per inner step

  void validate() const;  // throws ConfigError
};

// identity, mass +-10%, slope +-2 degrees
std::vector<TaskPerturbation> default_train_tasks();

// Parses and fully validates; any unknown key at any level is an error.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// stable re-emission (written next to run outputs for provenance)
std::string config_to_json(const ExperimentConfig& config);

// CLI flag overrides, applied after parsing
struct ConfigOverrides {
  std::optional<double> alpha;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> out_dir;
};

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);

}  // namespace mbmrl

#endif  // MBMRL_CONFIG_HPP_
