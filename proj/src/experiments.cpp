#include "implreg/experiments.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "implreg/aggregation.hpp"
#include "implreg/basicineq.hpp"
#include "implreg/csv.hpp"
#include "implreg/svg.hpp"

namespace implreg {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

// ---- configuration ----

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& item : csv::split_line(s, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Missing keys leave dst untouched; unparsable values throw.
template <class T>
void read_value(const pt::ptree& tree, const char* key, T& dst) {
  if (tree.get_child_optional(key)) dst = tree.get<T>(key);
}

Task parse_task(const std::string& s) {
  if (s == "linear") return Task::linear;
  if (s == "logistic") return Task::logistic;
  if (s == "poisson") return Task::poisson;
  throw std::invalid_argument("unknown task: " + s);
}

}  // namespace

RunConfig load_config(const std::string& path, RunConfig c) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error("config: " + std::string(e.what()));
  }
  auto get = [&](const char* key) { return tree.get_optional<std::string>(key); };
  try {
    if (auto v = get("data.preset")) c.preset = ExperimentPreset::named(*v);
    if (auto v = get("data.task")) c.preset.task = parse_task(*v);
    if (auto v = get("data.algorithm")) {
      if (*v != "gd" && *v != "egd") throw std::invalid_argument("unknown algorithm: " + *v);
      c.preset.algorithm = *v == "gd" ? Algorithm::gd : Algorithm::egd;
    }
    if (auto v = get("data.regime")) {
      if (*v != "under" && *v != "over") throw std::invalid_argument("unknown regime: " + *v);
      c.preset.regime = *v == "under" ? Regime::under : Regime::over;
    }
    read_value(tree, "data.n", c.preset.n);
    read_value(tree, "data.d", c.preset.d);
    read_value(tree, "data.gamma", c.preset.gamma);
    read_value(tree, "data.seed", c.seed);
    if (auto v = get("optimizer.schedule")) c.schedule = StepSchedule::parse(*v);
    if (auto v = get("explicit.lambda_grid")) c.lambda_grid = LambdaGrid::parse(*v);
    read_value(tree, "explicit.tolerance", c.solver.tolerance);
    read_value(tree, "explicit.max_iter", c.solver.max_iter);
    if (auto v = get("explicit.egd_penalty")) c.egd_penalty = *v;
    if (auto v = get("output.dir")) c.out_dir = *v;
    read_value(tree, "output.checkpoints_per_decade", c.checkpoints_per_decade);
    read_value(tree, "output.path_components", c.path_components);
    if (auto v = get("checks.list")) c.checks = split_list(*v);
    read_value(tree, "checks.delta", c.delta);
    read_value(tree, "checks.replicates", c.replicates);
    if (auto v = get("aggregate.collection")) c.collection_csv = *v;
    read_value(tree, "aggregate.models", c.aggregate_models);
    read_value(tree, "aggregate.eta", c.aggregate_eta);
    read_value(tree, "aggregate.T", c.aggregate_T);
  } catch (const pt::ptree_bad_data& e) {
    throw std::runtime_error("config: bad value: " + std::string(e.what()));
  }
  if (c.egd_penalty != "l1sq" && c.egd_penalty != "kl") throw std::invalid_argument("egd_penalty must be l1sq or kl");
  if (c.preset.n < 1 || c.preset.d < 1) throw std::invalid_argument("n and d must be positive");
  if (c.checkpoints_per_decade < 1) throw std::invalid_argument("checkpoints_per_decade must be >= 1");
  return c;
}

void apply_env_overrides(RunConfig& c) {
  if (const char* out = std::getenv("IMPLREG_OUT"); out && *out) c.out_dir = out;
  if (const char* seed = std::getenv("IMPLREG_SEED"); seed && *seed) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(seed, &end, 10);
    if (!end || *end != '\0') throw std::invalid_argument("IMPLREG_SEED must be an unsigned integer");
    c.seed = v;
  }
}

// ---- sweep ----

namespace {

Vec initial_point(const ExperimentPreset& p) {
  if (p.algorithm == Algorithm::gd) return Vec::Zero(p.d);
  return Vec::Constant(p.d, 1.0 / static_cast<double>(p.d));
}

RegularizedSolution failed_solution(double lambda, Index d, const std::string& why) {
  RegularizedSolution s;
  s.lambda = lambda;
  s.theta = Vec::Constant(d, std::numeric_limits<double>::quiet_NaN());
  s.loss = s.penalty = s.objective = std::numeric_limits<double>::quiet_NaN();
  s.message = why;
  return s;
}

std::vector<std::size_t> checkpoint_records(const IterateTrace& trace, double lo, double hi, int per_decade) {
  std::vector<std::size_t> recs;
  std::set<std::size_t> seen;
  const double tmax = std::min(hi, trace.tau.back());
  if (!(tmax > 0.0)) return recs;
  const double a = std::log10(lo), b = std::log10(tmax);
  const int steps = std::max(1, static_cast<int>(std::ceil((b - a) * per_decade)));
  for (int k = 0; k <= steps; ++k) {
    const double target = std::pow(10.0, a + (b - a) * k / steps);
    const std::size_t r = trace.nearest_record(target);
    if (trace.tau[r] > 0.0 && seen.insert(r).second) recs.push_back(r);
  }
  std::sort(recs.begin(), recs.end());
  return recs;
}

}  // namespace

Sweep compute_sweep(const RunConfig& config) {
  Sweep sw{config.preset, generate(config.preset, config.seed), {}, {}, {}};
  if (!sw.data.clamped.empty())
    sw.warnings.push_back(std::to_string(sw.data.clamped.size()) + " Poisson means floored at 1e-6");
  const GlmProblem& problem = sw.data.problem;
  const GlmObjective f(problem);
  const Vec theta0 = initial_point(config.preset);
  const StepSchedule schedule = config.effective_schedule();
  const bool gd = config.preset.algorithm == Algorithm::gd;
  RunOptions run_options;
  if (!(gd && problem.family().kind == Family::poisson)) {
    const double L = smoothness_constant(problem, gd ? SmoothnessGeometry::euclidean : SmoothnessGeometry::l1_simplex);
    if (schedule.max_eta() <= 1.0 / L) {
      run_options.smoothness = L;
    } else {
      std::ostringstream os;
      os << "schedule step " << schedule.max_eta() << " exceeds 1/L = " << 1.0 / L << "; descent not guaranteed";
      sw.warnings.push_back(os.str());
    }
  }
  sw.trace = gd ? gd_run(f, theta0, schedule, run_options) : egd_run(f, theta0, schedule, run_options);
  for (const auto& w : sw.trace.warnings) sw.warnings.push_back(w);

  const auto recs = checkpoint_records(sw.trace, config.axis_min(), config.axis_max(), config.checkpoints_per_decade);
  sw.points.resize(recs.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    sw.points[k].record = recs[k];
    sw.points[k].T = sw.trace.t[recs[k]];
    sw.points[k].tau = sw.trace.tau[recs[k]];
  }
  const double d = static_cast<double>(problem.d());
  const double coef[3] = {0.25, 1.0, 0.5 * (d + 1.0)};
  const int families = gd ? 2 : 3;
  const long npts = static_cast<long>(sw.points.size());
#pragma omp parallel for schedule(static, 1)
  for (int fam = 0; fam < families; ++fam) {
    std::optional<Vec> warm, warm_log;
    for (long k = 0; k < npts; ++k) {
      SweepPoint& pt = sw.points[static_cast<std::size_t>(k)];
      const double lambda = coef[fam] / pt.tau;
      RegularizedSolution sol;
      try {
        if (gd) {
          RidgeOptions ro;
          static_cast<SolverOptions&>(ro) = config.solver;
          ro.warm_start = warm;
          sol = ridge_glm_solve(problem, lambda, ro);
        } else {
          KlOptions ko;
          static_cast<SolverOptions&>(ko) = config.solver;
          ko.tolerance = std::max(config.solver.tolerance, 1e-10);
          ko.warm_start_log = warm_log;
          sol = kl_glm_solve(problem, lambda, theta0, ko);
        }
        if (sol.theta.allFinite()) {
          warm = sol.theta;
          warm_log = sol.log_theta;
        }
      } catch (const std::exception& e) {
        sol = failed_solution(lambda, problem.d(), e.what());
      }
      (fam == 0 ? pt.quarter : fam == 1 ? pt.full : pt.worst) = std::move(sol);
    }
  }
  int failures = 0;
  for (auto& pt : sw.points) {
    if (gd) pt.worst = pt.full;
    failures += !pt.quarter.converged + !pt.full.converged + (gd ? 0 : !pt.worst.converged);
  }
  if (failures > 0) sw.warnings.push_back(std::to_string(failures) + " explicit solves did not converge");
  return sw;
}

// ---- rows ----

std::vector<EnvelopeRow> envelope_rows(const Sweep& sw, const std::string& egd_penalty) {
  const bool gd = sw.preset.algorithm == Algorithm::gd;
  const Vec& theta0 = sw.trace.initial();
  auto pen = [&](const Vec& th) -> double {
    if (!th.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    if (gd) return (th - theta0).squaredNorm();
    if (egd_penalty == "kl") return kl_divergence(th, theta0);
    return l1_squared_penalty(theta0, th);
  };
  const double d = static_cast<double>(theta0.size());
  std::vector<EnvelopeRow> rows;
  for (const auto& p : sw.points) {
    const double tau = p.tau;
    EnvelopeRow r;
    r.tau = tau;
    r.implicit_obj = sw.trace.objective[p.record] + pen(sw.trace.iterates[p.record]) / (4.0 * tau);
    r.explicit_obj_quarter = p.quarter.loss + pen(p.quarter.theta) / (4.0 * tau);
    r.explicit_obj_full = p.full.loss + pen(p.full.theta) / tau;
    r.explicit_obj_worst = gd ? r.explicit_obj_full : p.worst.loss + 0.5 * (d + 1.0) * pen(p.worst.theta) / tau;
    rows.push_back(r);
  }
  return rows;
}

namespace {

double safe_risk(const GlmProblem& problem, const Vec& theta) {
  if (!theta.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return prediction_risk(problem, theta);
  } catch (const SaturationError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

std::vector<RiskRow> risk_rows(const Sweep& sw) {
  std::vector<RiskRow> rows;
  const GlmProblem& pr = sw.data.problem;
  for (const auto& p : sw.points) {
    rows.push_back({p.tau, safe_risk(pr, sw.trace.iterates[p.record]), safe_risk(pr, p.quarter.theta),
                    safe_risk(pr, p.full.theta)});
  }
  return rows;
}

std::vector<NormRow> implicit_norm_rows(const Sweep& sw) {
  std::vector<NormRow> rows;
  for (std::size_t k = 0; k < sw.trace.size(); ++k)
    if (sw.trace.tau[k] > 0.0) rows.push_back({sw.trace.tau[k], "implicit", sw.trace.iterates[k].norm()});
  return rows;
}

// ---- writers ----

namespace {

std::string prepare(const RunConfig& c, const std::string& file) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + c.out_dir + ": " + ec.message());
  return (fs::path(c.out_dir) / (c.preset.name() + "_" + file)).string();
}

std::string f2s(double v) { return csv::format_double(v); }

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

RunOutputs write_envelope(const Sweep& sw, const RunConfig& c) {
  RunOutputs out;
  out.warnings = sw.warnings;
  const auto rows = envelope_rows(sw, c.egd_penalty);
  const std::string path = prepare(c, "envelope.csv");
  {
    auto f = csv::open_output(path);
    f << "tau,implicit_obj,explicit_obj_quarter,explicit_obj_full,explicit_obj_worst\n";
    for (const auto& r : rows)
      f << f2s(r.tau) << ',' << f2s(r.implicit_obj) << ',' << f2s(r.explicit_obj_quarter) << ','
        << f2s(r.explicit_obj_full) << ',' << f2s(r.explicit_obj_worst) << "\n";
  }
  out.files.push_back(path);
  std::vector<svg::Series> series(4);
  series[0] = {"implicit", {}, {}, "#d62728"};
  series[1] = {"lambda=1/(4 tau)", {}, {}, "#2ca02c"};
  series[2] = {"lambda=1/tau", {}, {}, "#1f77b4"};
  series[3] = {"lambda=(d+1)/(2 tau)", {}, {}, "#ff7f0e"};
  for (const auto& r : rows) {
    const double ys[4] = {r.implicit_obj, r.explicit_obj_quarter, r.explicit_obj_full, r.explicit_obj_worst};
    for (int s = 0; s < 4; ++s) {
      series[static_cast<std::size_t>(s)].x.push_back(r.tau);
      series[static_cast<std::size_t>(s)].y.push_back(ys[s]);
    }
  }
  if (sw.preset.algorithm == Algorithm::gd) series.pop_back();
  const std::string svg_path = prepare(c, "envelope.svg");
  svg::write_line_chart(svg_path, sw.preset.name() + " training envelope", "tau", "loss + penalty", series,
                        c.axis_min(), c.axis_max());
  out.files.push_back(svg_path);
  return out;
}

RunOutputs write_risk(const Sweep& sw, const RunConfig& c) {
  RunOutputs out;
  out.warnings = sw.warnings;
  const auto rows = risk_rows(sw);
  const std::string path = prepare(c, "risk.csv");
  {
    auto f = csv::open_output(path);
    f << "tau,risk_implicit,risk_quarter,risk_full\n";
    for (const auto& r : rows)
      f << f2s(r.tau) << ',' << f2s(r.risk_implicit) << ',' << f2s(r.risk_quarter) << ',' << f2s(r.risk_full) << "\n";
  }
  out.files.push_back(path);
  std::vector<svg::Series> series{{"implicit", {}, {}, "#d62728"},
                                  {"lambda=1/(4 tau)", {}, {}, "#2ca02c"},
                                  {"lambda=1/tau", {}, {}, "#1f77b4"}};
  for (const auto& r : rows) {
    const double ys[3] = {r.risk_implicit, r.risk_quarter, r.risk_full};
    for (int s = 0; s < 3; ++s) {
      series[static_cast<std::size_t>(s)].x.push_back(r.tau);
      series[static_cast<std::size_t>(s)].y.push_back(ys[s]);
    }
  }
  const std::string svg_path = prepare(c, "risk.svg");
  svg::write_line_chart(svg_path, sw.preset.name() + " prediction risk", "tau", "risk", series, c.axis_min(),
                        c.axis_max());
  out.files.push_back(svg_path);
  return out;
}

RunOutputs write_paths(const Sweep& sw, const RunConfig& c, PathResult* path_out) {
  RunOutputs out;
  out.warnings = sw.warnings;
  const GlmProblem& problem = sw.data.problem;
  PathOptions po;
  po.solver = sw.preset.algorithm == Algorithm::gd ? PathSolver::ridge : PathSolver::kl;
  po.solver_options = c.solver;
  if (po.solver == PathSolver::kl) po.solver_options.tolerance = std::max(c.solver.tolerance, 1e-10);
  PathResult path = lambda_path_solve(problem, c.lambda_grid, po);
  if (path.nonconverged > 0) out.warnings.push_back(std::to_string(path.nonconverged) + " path points did not converge");
  if (!path.monotone)
    out.warnings.push_back("regularized objective not monotone in lambda (max drop " + f2s(path.max_monotone_violation) + ")");

  const Index d = problem.d();
  const Index m = sw.preset.regime == Regime::over ? std::min<Index>(d, c.path_components) : d;
  const std::string csv_path = prepare(c, "paths.csv");
  {
    auto f = csv::open_output(csv_path);
    f << "tau_or_invlambda,coord_index,value,estimator_kind\n";
    for (const auto& p : sw.points)
      for (Index j = 0; j < m; ++j)
        f << f2s(p.tau) << ',' << j << ',' << f2s(sw.trace.iterates[p.record](j)) << ",implicit\n";
    for (const auto& s : path.points)
      for (Index j = 0; j < m; ++j) f << f2s(1.0 / s.lambda) << ',' << j << ',' << f2s(s.theta(j)) << ",explicit\n";
  }
  out.files.push_back(csv_path);
  const std::string norm_path = prepare(c, "norms.csv");
  {
    auto f = csv::open_output(norm_path);
    f << "tau_or_invlambda,estimator_kind,l2_norm\n";
    for (const auto& r : implicit_norm_rows(sw)) f << f2s(r.x) << ',' << r.estimator << ',' << f2s(r.l2_norm) << "\n";
    for (const auto& s : path.points) f << f2s(1.0 / s.lambda) << ",explicit," << f2s(s.theta.norm()) << "\n";
  }
  out.files.push_back(norm_path);

  std::vector<svg::Series> series;
  for (Index j = 0; j < m; ++j) {
    svg::Series imp{j == 0 ? "implicit" : "", {}, {}, kPalette[j % 10], false, 1.0};
    svg::Series exp{j == 0 ? "explicit" : "", {}, {}, kPalette[j % 10], true, 1.0};
    for (const auto& p : sw.points) {
      imp.x.push_back(p.tau);
      imp.y.push_back(sw.trace.iterates[p.record](j));
    }
    for (const auto& s : path.points) {
      exp.x.push_back(1.0 / s.lambda);
      exp.y.push_back(s.theta(j));
    }
    series.push_back(std::move(imp));
    series.push_back(std::move(exp));
  }
  const std::string svg_path = prepare(c, "paths.svg");
  svg::write_line_chart(svg_path, sw.preset.name() + " solution paths", "tau or 1/lambda", "coordinate", series,
                        c.axis_min(), c.axis_max());
  out.files.push_back(svg_path);
  if (path_out) *path_out = std::move(path);
  return out;
}

RunOutputs run_envelope(const RunConfig& c) { return write_envelope(compute_sweep(c), c); }
RunOutputs run_risk(const RunConfig& c) { return write_risk(compute_sweep(c), c); }
RunOutputs run_paths(const RunConfig& c) { return write_paths(compute_sweep(c), c); }

// ---- checks ----

namespace {

bool wanted(const RunConfig& c, const std::string& name) {
  return c.checks.empty() || std::find(c.checks.begin(), c.checks.end(), name) != c.checks.end();
}

std::string describe(double v) { return csv::format_double(v); }

}  // namespace

std::vector<CheckResult> run_checks(const RunConfig& c) {
  static const std::set<std::string> known{"basicineq", "envelope", "monotone", "path", "equivalence"};
  for (const auto& name : c.checks)
    if (!known.count(name)) throw std::invalid_argument("unknown check: " + name);
  std::vector<CheckResult> results;
  const bool need_sweep = wanted(c, "basicineq") || wanted(c, "envelope") || wanted(c, "monotone") || wanted(c, "path");
  std::optional<Sweep> sw;
  if (need_sweep) sw = compute_sweep(c);
  const bool gd = c.preset.algorithm == Algorithm::gd;

  if (wanted(c, "basicineq")) {
    const GlmObjective f(sw->data.problem);
    std::vector<Vec> zs;
    const std::size_t np = sw->points.size();
    for (std::size_t k = 0; k < 29 && np > 0; ++k) {
      const auto& s = sw->points[k * np / 29].full;
      if (s.theta.allFinite()) zs.push_back(s.theta);
    }
    CounterRng rng(c.seed, 99);
    const Index d = sw->data.problem.d();
    for (int k = 0; k < 20; ++k) {
      Vec z = rng.normal_vector(d);
      if (gd) {
        z *= sw->data.theta_true.norm() / std::sqrt(static_cast<double>(d));
      } else {
        z = z.array().exp().matrix();
        z /= z.sum();
      }
      zs.push_back(z);
    }
    zs.push_back(sw->data.theta_true);
    std::unique_ptr<BregmanGeometry> geo;
    if (gd) geo = std::make_unique<EuclideanGeometry>();
    else geo = std::make_unique<EntropyGeometry>();
    const BoundLedger ledger = verify_trace(sw->trace, f, *geo, zs);
    ledger.write_csv((fs::path(c.out_dir) / (c.preset.name() + "_ledger.csv")).string());
    results.push_back({"basicineq", ledger.passed,
                       "min gap " + describe(ledger.min_gap) + " at T=" + std::to_string(ledger.worst_T) +
                           " z=" + std::to_string(ledger.worst_z) + " over " + std::to_string(ledger.rows.size()) +
                           " pairs"});
  }

  if (wanted(c, "envelope")) {
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t checked = 0;
    if (gd) {
      const auto rows = envelope_rows(*sw);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (!sw->points[k].quarter.converged || !sw->points[k].full.converged) continue;
        const double g = std::min(rows[k].implicit_obj - rows[k].explicit_obj_quarter,
                                  rows[k].explicit_obj_full - rows[k].implicit_obj);
        worst = std::min(worst, g);
        ++checked;
      }
      ok = checked > 0 && worst >= -1e-7;
    } else {
      const GlmObjective f(sw->data.problem);
      const Vec pi = sw->trace.initial();
      const KlSolver solver = [&](double lambda) { return kl_glm_solve(sw->data.problem, lambda, pi).theta; };
      const std::size_t np = sw->points.size();
      for (std::size_t k = 0; k < 10 && np > 0; ++k) {
        const EgdEnvelope e = envelope_egd(f, sw->trace, sw->points[k * np / 10].record, solver);
        worst = std::min({worst, e.min_gap_dplus1, e.min_gap_reverse_pinsker});
        ++checked;
      }
      ok = checked > 0 && worst >= -1e-7;
    }
    results.push_back({"envelope", ok, "min containment gap " + describe(worst) + " over " + std::to_string(checked) +
                                           " checkpoints"});
  }

  if (wanted(c, "monotone")) {
    double worst = 0.0;
    for (std::size_t k = 1; k < sw->trace.size(); ++k)
      worst = std::max(worst, sw->trace.objective[k] - sw->trace.objective[k - 1]);
    results.push_back({"monotone", worst <= 1e-9, "max objective increase " + describe(worst)});
  }

  if (wanted(c, "path")) {
    PathOptions po;
    po.solver = gd ? PathSolver::ridge : PathSolver::kl;
    po.solver_options = c.solver;
    const PathResult path = lambda_path_solve(sw->data.problem, c.lambda_grid, po);
    results.push_back({"path", path.monotone,
                       "max objective drop " + describe(path.max_monotone_violation) + ", " +
                           std::to_string(path.nonconverged) + " unconverged of " +
                           std::to_string(path.points.size())});
  }

  if (wanted(c, "equivalence")) {
    CounterRng rng(c.seed, 77);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const ModelCollection mc(rng.normal_vector(c.aggregate_models));
      worst = std::max(worst, egd_equivalence_check(mc, c.aggregate_eta, c.aggregate_T).max_deviation);
    }
    results.push_back({"equivalence", worst <= 1e-10, "max deviation " + describe(worst)});
  }
  return results;
}

// ---- aggregation demo ----

RunOutputs run_aggregate(const RunConfig& c) {
  RunOutputs out;
  std::optional<ModelCollection> mc;
  if (c.collection_csv) {
    mc = read_collection_csv(*c.collection_csv);
  } else {
    CounterRng rng(c.seed, 55);
    const Index k = c.aggregate_models;
    Vec pop(k), emp(k);
    for (Index j = 0; j < k; ++j) {
      pop(j) = rng.uniform(0.2, 0.8);
      emp(j) = pop(j) + 0.05 * rng.normal();
    }
    mc.emplace(emp, pop);
  }
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + c.out_dir);
  const std::string path = (fs::path(c.out_dir) / "aggregate.csv").string();
  const EquivalenceResult eq = egd_equivalence_check(*mc, c.aggregate_eta, c.aggregate_T);
  {
    auto f = csv::open_output(path);
    f << "lambda,expected_risk_gibbs,best_model_risk,gap,bound_gibbs,bound_egd\n";
    const bool have_pop = mc->population_risks().has_value();
    Index best = 0;
    if (have_pop) mc->population_risks()->minCoeff(&best);
    Vec point = Vec::Zero(mc->size());
    point(best) = 1.0;
    for (double lambda : LambdaGrid{1e-4, 1e2, 61}.values()) {
      const Vec w = gibbs_posterior(*mc, lambda);
      f << f2s(lambda);
      if (have_pop) {
        const double er = expected_risk(*mc, w), br = (*mc->population_risks())(best);
        f << ',' << f2s(er) << ',' << f2s(br) << ',' << f2s(er - br) << ','
          << f2s(risk_gap_bound(*mc, AggregateKind::gibbs, lambda, point)) << ','
          << f2s(risk_gap_bound(*mc, AggregateKind::egd, lambda, point));
      } else {
        f << ",,,,,";
      }
      f << "\n";
    }
  }
  out.files.push_back(path);
  const std::string eq_path = (fs::path(c.out_dir) / "aggregate_equivalence.json").string();
  {
    nlohmann::json j{{"eta", c.aggregate_eta},
                     {"T", c.aggregate_T},
                     {"lambda", eq.lambda},
                     {"max_deviation", eq.max_deviation},
                     {"models", mc->size()}};
    auto f = csv::open_output(eq_path);
    f << j.dump(2) << "\n";
  }
  out.files.push_back(eq_path);
  return out;
}

}  // namespace implreg
