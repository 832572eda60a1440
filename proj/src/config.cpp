#include "mbmrl/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace mbmrl {

using nlohmann::json;

namespace {

constexpr double kTwoDegrees = 2.0 * 3.14159265358979323846 / 180.0;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

// every object must match its allowlist exactly; typos surface as errors
void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail("config: " + path + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail("config: unknown key '" + path + "." + item.key() + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("config: bad value for '") + key + "'");
  }
}

std::string get_string(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(std::string("config: '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

TaskPerturbation parse_task(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "magnitude"});
  TaskPerturbation t;
  try {
    t.kind = perturbation_from_name(get_string(j, "kind", "identity"));
  } catch (const std::invalid_argument& e) {
    fail("config: " + path + ": " + e.what());
  }
  t.magnitude = get_or<double>(j, "magnitude", 0.0);
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    fail("config: " + path + ": " + e.what());
  }
  return t;
}

void parse_env(const json& j, EnvSpec& env) {
  check_keys(j, "env", {"id", "dt", "horizon", "diffusion_scale", "action_lo", "action_hi"});
  try {
    env = make_env_spec(env_from_name(get_string(j, "id", "pendulum_swingup")));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: env: ") + e.what());
  }
  env.dt = get_or<double>(j, "dt", env.dt);
  env.horizon = get_or<std::size_t>(j, "horizon", env.horizon);
  env.diffusion_scale = get_or<double>(j, "diffusion_scale", env.diffusion_scale);
  env.action_lo = get_or<VecD>(j, "action_lo", env.action_lo);
  env.action_hi = get_or<VecD>(j, "action_hi", env.action_hi);
}

void parse_noise(const json& j, NoiseConfig& n) {
  check_keys(j, "noise", {"kind", "theta", "sigma", "mu"});
  try {
    n.kind = noise_kind_from_name(get_string(j, "kind", noise_kind_name(n.kind)));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: noise: ") + e.what());
  }
  n.theta = get_or<double>(j, "theta", n.theta);
  n.sigma = get_or<double>(j, "sigma", n.sigma);
  n.mu = get_or<double>(j, "mu", n.mu);
}

void parse_policy(const json& j, PolicyConfig& p) {
  check_keys(j, "policy",
             {"kind", "hidden", "activation", "log_std_init", "knots", "knot_duration"});
  try {
    p.kind = policy_kind_from_name(get_string(j, "kind", policy_kind_name(p.kind)));
    p.activation = activation_from_name(
        get_string(j, "activation", activation_name(p.activation)));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: policy: ") + e.what());
  }
  p.hidden = get_or<std::vector<std::size_t>>(j, "hidden", p.hidden);
  p.log_std_init = get_or<double>(j, "log_std_init", p.log_std_init);
  p.knots = get_or<std::size_t>(j, "knots", p.knots);
  p.knot_duration = get_or<double>(j, "knot_duration", p.knot_duration);
}

void parse_dynamics(const json& j, DynamicsConfig& d, MetaConfig& m) {
  check_keys(j, "dynamics",
             {"hidden", "activation", "learning_rate", "buffer_capacity", "epochs",
              "batch_size", "holdout_ratio", "max_batches_per_epoch"});
  try {
    d.activation = activation_from_name(
        get_string(j, "activation", activation_name(d.activation)));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: dynamics: ") + e.what());
  }
  d.hidden = get_or<std::vector<std::size_t>>(j, "hidden", d.hidden);
  d.learning_rate = get_or<double>(j, "learning_rate", d.learning_rate);
  d.buffer_capacity = get_or<std::size_t>(j, "buffer_capacity", d.buffer_capacity);
  m.model_epochs = get_or<std::size_t>(j, "epochs", m.model_epochs);
  m.model_batch_size = get_or<std::size_t>(j, "batch_size", m.model_batch_size);
  m.model_holdout_ratio = get_or<double>(j, "holdout_ratio", m.model_holdout_ratio);
  m.model_max_batches = get_or<std::size_t>(j, "max_batches_per_epoch", m.model_max_batches);
}

void parse_meta(const json& j, MetaConfig& m) {
  check_keys(j, "meta",
             {"alpha", "beta", "delta", "gamma", "ensemble_size", "elite_count",
              "imaginary_rollouts", "epochs", "trajectories_per_member", "baseline",
              "regularizer_enabled", "pathwise_regularizer", "divergence_bound"});
  m.alpha = get_or<double>(j, "alpha", m.alpha);
  m.beta = get_or<double>(j, "beta", m.beta);
  m.delta = get_or<double>(j, "delta", m.delta);
  m.gamma = get_or<double>(j, "gamma", m.gamma);
  m.ensemble_size = get_or<std::size_t>(j, "ensemble_size", m.ensemble_size);
  m.elite_count = get_or<std::size_t>(j, "elite_count", m.elite_count);
  m.imaginary_rollouts = get_or<std::size_t>(j, "imaginary_rollouts", m.imaginary_rollouts);
  m.epochs = get_or<std::size_t>(j, "epochs", m.epochs);
  m.trajectories_per_member =
      get_or<std::size_t>(j, "trajectories_per_member", m.trajectories_per_member);
  try {
    m.baseline = baseline_kind_from_name(
        get_string(j, "baseline", baseline_kind_name(m.baseline)));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: meta: ") + e.what());
  }
  m.regularizer_enabled = get_or<bool>(j, "regularizer_enabled", m.regularizer_enabled);
  m.pathwise_regularizer =
      get_or<bool>(j, "pathwise_regularizer", m.pathwise_regularizer);
  m.divergence_bound = get_or<double>(j, "divergence_bound", m.divergence_bound);
}

void parse_heatmap(const json& j, HeatmapConfig& h) {
  check_keys(j, "heatmap",
             {"dim_x", "dim_y", "bins_x", "bins_y", "min_x", "max_x", "min_y", "max_y",
              "source", "metric"});
  h.dim_x = get_or<std::size_t>(j, "dim_x", h.dim_x);
  h.dim_y = get_or<std::size_t>(j, "dim_y", h.dim_y);
  h.bins_x = get_or<std::size_t>(j, "bins_x", h.bins_x);
  h.bins_y = get_or<std::size_t>(j, "bins_y", h.bins_y);
  h.min_x = get_or<double>(j, "min_x", h.min_x);
  h.max_x = get_or<double>(j, "max_x", h.max_x);
  h.min_y = get_or<double>(j, "min_y", h.min_y);
  h.max_y = get_or<double>(j, "max_y", h.max_y);
  try {
    h.source = heatmap_source_from_name(get_string(j, "source", heatmap_source_name(h.source)));
    h.metric = heatmap_metric_from_name(get_string(j, "metric", heatmap_metric_name(h.metric)));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: heatmap: ") + e.what());
  }
}

void parse_run(const json& j, RunConfig& r) {
  check_keys(j, "run",
             {"seeds", "out_dir", "workers", "checkpoint_every", "emit_curves"});
  r.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", r.seeds);
  r.out_dir = get_string(j, "out_dir", r.out_dir);
  r.workers = get_or<std::size_t>(j, "workers", r.workers);
  r.checkpoint_every = get_or<std::size_t>(j, "checkpoint_every", r.checkpoint_every);
  r.emit_curves = get_or<bool>(j, "emit_curves", r.emit_curves);
}

void parse_ablation(const json& j, AblationConfig& a) {
  check_keys(j, "ablation", {"axis", "values"});
  try {
    a.axis = ablation_axis_from_name(get_string(j, "axis", ablation_axis_name(a.axis)));
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: ablation: ") + e.what());
  }
  a.values = get_or<VecD>(j, "values", a.values);
}

}  // namespace

const char* ablation_axis_name(AblationAxis a) {
  switch (a) {
    case AblationAxis::kAlpha: return "alpha";
    case AblationAxis::kEnsembleSize: return "ensemble_size";
    case AblationAxis::kImaginaryN: return "imaginary_n";
  }
  return "unknown";
}

AblationAxis ablation_axis_from_name(const std::string& name) {
  if (name == "alpha") return AblationAxis::kAlpha;
  if (name == "ensemble_size") return AblationAxis::kEnsembleSize;
  if (name == "imaginary_n") return AblationAxis::kImaginaryN;
  throw std::invalid_argument("unknown ablation axis: " + name);
}

const char* heatmap_source_name(HeatmapSource s) {
  return s == HeatmapSource::kVisitedStates ? "visited_states" : "uniform_grid";
}

HeatmapSource heatmap_source_from_name(const std::string& name) {
  if (name == "visited_states") return HeatmapSource::kVisitedStates;
  if (name == "uniform_grid") return HeatmapSource::kUniformGrid;
  throw std::invalid_argument("unknown heatmap source: " + name);
}

const char* heatmap_metric_name(HeatmapMetric m) {
  return m == HeatmapMetric::kFeedback ? "feedback" : "feedforward";
}

HeatmapMetric heatmap_metric_from_name(const std::string& name) {
  if (name == "feedback") return HeatmapMetric::kFeedback;
  if (name == "feedforward") return HeatmapMetric::kFeedforward;
  throw std::invalid_argument("unknown heatmap metric: " + name);
}

std::vector<TaskPerturbation> default_train_tasks() {
  return {
      {PerturbationKind::kIdentity, 0.0},
      {PerturbationKind::kMassScale, 0.9},
      {PerturbationKind::kMassScale, 1.1},
      {PerturbationKind::kGravitySlope, kTwoDegrees},
      {PerturbationKind::kGravitySlope, -kTwoDegrees},
  };
}

void ExperimentConfig::validate() const {
  try {
    env.validate();
    meta.validate();
    for (const auto& t : train_tasks) t.validate();
    for (const auto& t : test_tasks) t.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("config: ") + e.what());
  }
  if (policy.hidden.empty() && policy.kind == PolicyKind::kMlpGaussian)
    fail("config: policy.hidden must not be empty for mlp_gaussian");
  for (std::size_t h : policy.hidden)
    if (h == 0) fail("config: policy.hidden entries must be >= 1");
  if (policy.kind == PolicyKind::kLinearTimeVarying) {
    if (policy.knots == 0) fail("config: policy.knots must be >= 1");
    if (!(policy.knot_duration > 0.0)) fail("config: policy.knot_duration must be > 0");
  }
  for (std::size_t h : dynamics.hidden)
    if (h == 0) fail("config: dynamics.hidden entries must be >= 1");
  if (!(dynamics.learning_rate > 0.0)) fail("config: dynamics.learning_rate must be > 0");
  if (dynamics.buffer_capacity == 0) fail("config: dynamics.buffer_capacity must be >= 1");
  if (noise.kind != NoiseKind::kNone) {
    if (!(noise.theta >= 0.0)) fail("config: noise.theta must be >= 0");
    if (!(noise.sigma >= 0.0)) fail("config: noise.sigma must be >= 0");
    if (!std::isfinite(noise.mu)) fail("config: noise.mu must be finite");
  }
  if (run.seeds.empty()) fail("config: run.seeds must not be empty");
  if (run.workers == 0) fail("config: run.workers must be >= 1");
  if (run.out_dir.empty()) fail("config: run.out_dir must not be empty");
  if (heatmap.bins_x < 1 || heatmap.bins_y < 1)
    fail("config: heatmap bin counts must be >= 1");
  if (!(heatmap.max_x > heatmap.min_x) || !(heatmap.max_y > heatmap.min_y))
    fail("config: heatmap ranges must be nonempty");
  if (heatmap.dim_x >= env.state_dim() || heatmap.dim_y >= env.state_dim())
    fail("config: heatmap projection dimensions out of range");
  if (ablation.values.empty()) fail("config: ablation.values must not be empty");
  if (ablation.axis != AblationAxis::kAlpha) {
    for (double v : ablation.values)
      if (!(v >= 1.0) || v != std::floor(v))
        fail("config: ablation.values must be whole numbers >= 1 for this axis");
  } else {
    for (double v : ablation.values)
      if (!(v >= 0.0) || !std::isfinite(v))
        fail("config: ablation alpha values must be finite and >= 0");
  }
  if (eval_adapt_trajectories == 0)
    fail("config: eval.adapt_trajectories must be >= 1");
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("config: not valid JSON: ") + e.what());
  }
  check_keys(j, "(root)",
             {"schema", "env", "noise", "policy", "dynamics", "meta", "eval", "tasks",
              "run", "heatmap", "ablation"});
  const std::string schema = get_string(j, "schema", "");
  if (schema != kConfigSchema)
    fail("config: schema must be '" + std::string(kConfigSchema) + "' (got '" + schema +
         "')");

  ExperimentConfig cfg;
  if (j.contains("env")) parse_env(j.at("env"), cfg.env);
  if (j.contains("noise")) parse_noise(j.at("noise"), cfg.noise);
  if (j.contains("policy")) parse_policy(j.at("policy"), cfg.policy);
  if (j.contains("dynamics")) parse_dynamics(j.at("dynamics"), cfg.dynamics, cfg.meta);
  if (j.contains("meta")) parse_meta(j.at("meta"), cfg.meta);
  if (j.contains("eval")) {
    check_keys(j.at("eval"), "eval", {"episodes", "adapt_steps", "adapt_trajectories"});
    cfg.meta.eval_episodes =
        get_or<std::size_t>(j.at("eval"), "episodes", cfg.meta.eval_episodes);
    cfg.eval_adapt_steps =
        get_or<std::size_t>(j.at("eval"), "adapt_steps", cfg.eval_adapt_steps);
    cfg.eval_adapt_trajectories = get_or<std::size_t>(j.at("eval"), "adapt_trajectories",
                                                      cfg.eval_adapt_trajectories);
  }
  if (j.contains("tasks")) {
    const json& t = j.at("tasks");
    check_keys(t, "tasks", {"train", "test"});
    if (t.contains("train")) {
      if (!t.at("train").is_array()) fail("config: tasks.train must be an array");
      std::size_t idx = 0;
      for (const auto& e : t.at("train"))
        cfg.train_tasks.push_back(parse_task(e, "tasks.train[" + std::to_string(idx++) + "]"));
    }
    if (t.contains("test")) {
      if (!t.at("test").is_array()) fail("config: tasks.test must be an array");
      std::size_t idx = 0;
      for (const auto& e : t.at("test"))
        cfg.test_tasks.push_back(parse_task(e, "tasks.test[" + std::to_string(idx++) + "]"));
    }
  }
  if (cfg.train_tasks.empty()) cfg.train_tasks = default_train_tasks();
  if (j.contains("run")) parse_run(j.at("run"), cfg.run);
  if (j.contains("heatmap")) parse_heatmap(j.at("heatmap"), cfg.heatmap);
  if (j.contains("ablation")) parse_ablation(j.at("ablation"), cfg.ablation);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["schema"] = kConfigSchema;
  j["env"] = {{"id", env_name(config.env.env_id)},
              {"dt", config.env.dt},
              {"horizon", config.env.horizon},
              {"diffusion_scale", config.env.diffusion_scale},
              {"action_lo", config.env.action_lo},
              {"action_hi", config.env.action_hi}};
  j["noise"] = {{"kind", noise_kind_name(config.noise.kind)},
                {"theta", config.noise.theta},
                {"sigma", config.noise.sigma},
                {"mu", config.noise.mu}};
  j["policy"] = {{"kind", policy_kind_name(config.policy.kind)},
                 {"hidden", config.policy.hidden},
                 {"activation", activation_name(config.policy.activation)},
                 {"log_std_init", config.policy.log_std_init},
                 {"knots", config.policy.knots},
                 {"knot_duration", config.policy.knot_duration}};
  j["dynamics"] = {{"hidden", config.dynamics.hidden},
                   {"activation", activation_name(config.dynamics.activation)},
                   {"learning_rate", config.dynamics.learning_rate},
                   {"buffer_capacity", config.dynamics.buffer_capacity},
                   {"epochs", config.meta.model_epochs},
                   {"batch_size", config.meta.model_batch_size},
                   {"holdout_ratio", config.meta.model_holdout_ratio},
                   {"max_batches_per_epoch", config.meta.model_max_batches}};
  j["meta"] = {{"alpha", config.meta.alpha},
               {"beta", config.meta.beta},
               {"delta", config.meta.delta},
               {"gamma", config.meta.gamma},
               {"ensemble_size", config.meta.ensemble_size},
               {"elite_count", config.meta.elite_count},
               {"imaginary_rollouts", config.meta.imaginary_rollouts},
               {"epochs", config.meta.epochs},
               {"trajectories_per_member", config.meta.trajectories_per_member},
               {"baseline", baseline_kind_name(config.meta.baseline)},
               {"regularizer_enabled", config.meta.regularizer_enabled},
               {"pathwise_regularizer", config.meta.pathwise_regularizer},
               {"divergence_bound", config.meta.divergence_bound}};
  j["eval"] = {{"episodes", config.meta.eval_episodes},
               {"adapt_steps", config.eval_adapt_steps},
               {"adapt_trajectories", config.eval_adapt_trajectories}};
  json train = json::array();
  for (const auto& t : config.train_tasks)
    train.push_back({{"kind", perturbation_name(t.kind)}, {"magnitude", t.magnitude}});
  json test = json::array();
  for (const auto& t : config.test_tasks)
    test.push_back({{"kind", perturbation_name(t.kind)}, {"magnitude", t.magnitude}});
  j["tasks"] = {{"train", std::move(train)}, {"test", std::move(test)}};
  j["run"] = {{"seeds", config.run.seeds},
              {"out_dir", config.run.out_dir},
              {"workers", config.run.workers},
              {"checkpoint_every", config.run.checkpoint_every},
              {"emit_curves", config.run.emit_curves}};
  j["heatmap"] = {{"dim_x", config.heatmap.dim_x},
                  {"dim_y", config.heatmap.dim_y},
                  {"bins_x", config.heatmap.bins_x},
                  {"bins_y", config.heatmap.bins_y},
                  {"min_x", config.heatmap.min_x},
                  {"max_x", config.heatmap.max_x},
                  {"min_y", config.heatmap.min_y},
                  {"max_y", config.heatmap.max_y},
                  {"source", heatmap_source_name(config.heatmap.source)},
                  {"metric", heatmap_metric_name(config.heatmap.metric)}};
  j["ablation"] = {{"axis", ablation_axis_name(config.ablation.axis)},
                   {"values", config.ablation.values}};
  return j.dump(2);
}

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides) {
  if (overrides.alpha) config.meta.alpha = *overrides.alpha;
  if (overrides.seeds) config.run.seeds = *overrides.seeds;
  if (overrides.out_dir) config.run.out_dir = *overrides.out_dir;
  config.validate();
}

}  // namespace mbmrl
