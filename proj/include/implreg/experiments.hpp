#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "implreg/datagen.hpp"
#include "implreg/explicit.hpp"
#include "implreg/optimizers.hpp"

namespace implreg {

struct RunConfig {
  ExperimentPreset preset = ExperimentPreset::named("gd-linear-under");
  std::uint64_t seed = 7;
  std::optional<StepSchedule> schedule;  ///< defaults to the preset's published schedule
  LambdaGrid lambda_grid;
  std::string out_dir = "out";
  std::vector<std::string> checks;       ///< empty runs every check
  int checkpoints_per_decade = 20;
  SolverOptions solver{1e-10, 500};
  std::string egd_penalty = "l1sq";      ///< "l1sq" or "kl" for EGD envelope columns
  int path_components = 40;              ///< coordinates written in overparameterized regimes
  double delta = 2.0;
  long replicates = 2000;
  std::optional<std::string> collection_csv;
  int aggregate_models = 20;
  double aggregate_eta = 0.37;
  long aggregate_T = 113;

  StepSchedule effective_schedule() const { return schedule ? *schedule : preset.default_schedule(); }
  double axis_min() const { return 1e-4; }
  double axis_max() const { return preset.algorithm == Algorithm::gd ? 1e3 : 1e4; }
};

/// INI file with sections [data], [optimizer], [explicit], [output], [checks], [aggregate].
RunConfig load_config(const std::string& path, RunConfig base = {});
/// IMPLREG_OUT and IMPLREG_SEED.
void apply_env_overrides(RunConfig& config);

struct SweepPoint {
  std::size_t record = 0;
  long T = 0;
  double tau = 0.0;
  RegularizedSolution quarter;  ///< lambda = 1/(4 tau)
  RegularizedSolution full;     ///< lambda = 1/tau
  RegularizedSolution worst;    ///< lambda = (d+1)/(2 tau) for EGD; equals full for GD
};

/// One implicit trace plus explicit solutions at the aligned lambdas.
struct Sweep {
  ExperimentPreset preset;
  GeneratedData data;
  IterateTrace trace;
  std::vector<SweepPoint> points;
  std::vector<std::string> warnings;
};

Sweep compute_sweep(const RunConfig& config);

struct EnvelopeRow {
  double tau, implicit_obj, explicit_obj_quarter, explicit_obj_full, explicit_obj_worst;
};
struct RiskRow {
  double tau, risk_implicit, risk_quarter, risk_full;
};
struct NormRow {
  double x;
  std::string estimator;
  double l2_norm;
};

std::vector<EnvelopeRow> envelope_rows(const Sweep& sweep, const std::string& egd_penalty = "l1sq");
std::vector<RiskRow> risk_rows(const Sweep& sweep);
/// l2 norm of every recorded implicit iterate (x = tau).
std::vector<NormRow> implicit_norm_rows(const Sweep& sweep);

struct RunOutputs {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

RunOutputs write_envelope(const Sweep& sweep, const RunConfig& config);
RunOutputs write_risk(const Sweep& sweep, const RunConfig& config);
/// Also solves the explicit lambda path; returned through path when non-null.
RunOutputs write_paths(const Sweep& sweep, const RunConfig& config, PathResult* path = nullptr);

RunOutputs run_envelope(const RunConfig& config);
RunOutputs run_risk(const RunConfig& config);
RunOutputs run_paths(const RunConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};
/// Names: basicineq, envelope, monotone, path, equivalence.
std::vector<CheckResult> run_checks(const RunConfig& config);
RunOutputs run_aggregate(const RunConfig& config);

}  // namespace implreg
