#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mbmrl/config.hpp"
#include "mbmrl/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ensemble model-based meta-RL with smoothness regularization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  app.add_option("--config", config_path, "experiment config file (json)");
  app.add_option("--seed", seed, "run a single seed");
  app.add_option("--seeds", seeds, "comma-separated seed list")->delimiter(',');
  app.add_option("--out", out_dir, "output directory (overrides run.out_dir)");
  app.add_option("--alpha", alpha, "regularization weight (overrides meta.alpha)");

  auto* cmd_train = app.add_subcommand("train", "meta-train across the configured seeds");
  auto* cmd_mtest =
      app.add_subcommand("meta-test", "evaluate trained policies on held-out tasks");
  auto* cmd_ablate = app.add_subcommand("ablate", "sweep one configured axis");
  auto* cmd_heatmap =
      app.add_subcommand("heatmap", "emit a metric heatmap for a trained policy");
  auto* cmd_curves =
      app.add_subcommand("curves", "re-emit learning curves from run logs");
  auto* cmd_validate = app.add_subcommand("validate-config", "parse and check a config");
  for (auto* sub : {cmd_train, cmd_mtest, cmd_ablate, cmd_heatmap, cmd_curves, cmd_validate})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage counts as a configuration error
  }

  try {
    if (config_path.empty())
      throw mbmrl::ConfigError("a --config <file> is required");
    mbmrl::ExperimentConfig config = mbmrl::load_config_file(config_path);
    mbmrl::ConfigOverrides overrides;
    overrides.alpha = alpha;
    if (!seeds.empty())
      overrides.seeds = seeds;
    else if (seed)
      overrides.seeds = std::vector<std::uint64_t>{*seed};
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    mbmrl::apply_overrides(config, overrides);

    if (cmd_validate->parsed()) {
      std::cout << "config ok\n";
      return 0;
    }
    if (cmd_train->parsed()) return mbmrl::run_experiment(config).exit_code;
    if (cmd_mtest->parsed()) return mbmrl::run_meta_test(config);
    if (cmd_ablate->parsed()) return mbmrl::run_ablation(config);
    if (cmd_heatmap->parsed())
      return mbmrl::run_heatmap(config, config.run.seeds.front());
    if (cmd_curves->parsed()) return mbmrl::run_curves(config);
    return 1;
  } catch (const mbmrl::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
