#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "implreg/experiments.hpp"

using namespace implreg;

namespace {

void report(const RunOutputs& out) {
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& f : out.files) std::cout << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit vs explicit regularization experiments"};
  app.require_subcommand(1);

  std::string preset, config_path, schedule, grid, out;
  std::uint64_t seed = 0;
  std::vector<std::string> checks;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", preset, "Preset name, e.g. gd-linear-under");
    sub->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--schedule", schedule, "Step schedule eta:count,...");
    sub->add_option("--lambda-grid", grid, "Explicit lambda grid min:max:count");
  };
  auto* envelope = app.add_subcommand("envelope", "Training envelope CSV and plot");
  auto* risk = app.add_subcommand("risk", "Prediction risk CSV and plot");
  auto* paths = app.add_subcommand("paths", "Solution path CSVs and plot");
  auto* checks_cmd = app.add_subcommand("checks", "Run property checks on a preset");
  auto* aggregate = app.add_subcommand("aggregate", "Gibbs/EGD aggregation demo");
  for (auto* s : {envelope, risk, paths, checks_cmd, aggregate}) add_common(s);
  checks_cmd->add_option("--checks", checks, "Subset of basicineq,envelope,monotone,path,equivalence")
      ->delimiter(',');
  std::string collection;
  aggregate->add_option("--collection", collection, "CSV with model_id,empirical_risk[,population_risk,prior_weight]");

  CLI11_PARSE(app, argc, argv);

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path, config);
    if (!preset.empty()) config.preset = ExperimentPreset::named(preset);
    for (auto* s : app.get_subcommands()) {
      if (s->count("--seed")) config.seed = seed;
      if (s->count("--out")) config.out_dir = out;
    }
    if (!schedule.empty()) config.schedule = StepSchedule::parse(schedule);
    if (!grid.empty()) config.lambda_grid = LambdaGrid::parse(grid);
    if (!checks.empty()) config.checks = checks;
    if (!collection.empty()) config.collection_csv = collection;
    apply_env_overrides(config);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*envelope) report(run_envelope(config));
    else if (*risk) report(run_risk(config));
    else if (*paths) report(run_paths(config));
    else if (*aggregate) report(run_aggregate(config));
    else {
      const auto results = run_checks(config);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
