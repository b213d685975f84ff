// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <cmath>

#include "implreg/basicineq.hpp"
#include "implreg/datagen.hpp"
#include "implreg/explicit.hpp"
#include "implreg/optimizers.hpp"
#include "implreg/riskbounds.hpp"

using namespace implreg;

namespace {

struct TraceFixture {
  GlmProblem problem;
  GlmObjective f;
  IterateTrace trace;
  std::vector<Vec> zs;

  TraceFixture()
      : problem(generate(ExperimentPreset::named("gd-logistic-under"), 3).problem), f(problem) {
    const double L = smoothness_constant(problem, SmoothnessGeometry::euclidean);
    trace = gd_run(f, Vec::Zero(problem.d()), StepSchedule::constant(1.0 / L, 2000), {RecordPolicy::every_kth(5), {}});
    CounterRng rng(9, 0);
    for (int k = 0; k < 64; ++k) zs.push_back(rng.normal_vector(problem.d()));
  }
};

const TraceFixture& trace_fixture() {
  static const TraceFixture fx;
  return fx;
}

void BM_verify_trace(benchmark::State& state) {
  const auto& fx = trace_fixture();
  EuclideanGeometry eu;
  for (auto _ : state) benchmark::DoNotOptimize(verify_trace(fx.trace, fx.f, eu, fx.zs).min_gap);
}

void BM_verify_trace_serial(benchmark::State& state) {
  const auto& fx = trace_fixture();
  EuclideanGeometry eu;
  for (auto _ : state) benchmark::DoNotOptimize(verify_trace_serial(fx.trace, fx.f, eu, fx.zs).min_gap);
}

const GlmProblem& path_problem() {
  static const GlmProblem p = generate(ExperimentPreset::named("gd-poisson-under"), 3).problem;
  return p;
}

void BM_lambda_path(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lambda_path_solve(path_problem(), LambdaGrid{}).points.size());
}

void BM_lambda_path_serial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lambda_path_solve_serial(path_problem(), LambdaGrid{}).points.size());
}

// Sup-norm noise check: one response draw and one X^T eps per replicate.
ReplicateCheck sup_norm_check() {
  static const auto data = generate(ExperimentPreset::named("gd-linear-under"), 7);
  static const double bound = sup_norm_noise_bound(data.problem.design(), 5.0, 2.0);
  return [](long, CounterRng& rng) {
    const Vec y = sample_response(Task::linear, *data.problem.mean_truth(), 5.0, rng);
    const Vec w = data.problem.x().transpose() * (y - *data.problem.mean_truth()) / double(data.problem.n());
    return w.cwiseAbs().maxCoeff() > bound;
  };
}

void BM_coverage(benchmark::State& state) {
  const auto check = sup_norm_check();
  McOptions o;
  o.replicates = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(coverage_experiment("sup", 0.1, o, check).violations);
}

void BM_coverage_serial(benchmark::State& state) {
  const auto check = sup_norm_check();
  McOptions o;
  o.replicates = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(coverage_experiment_serial("sup", 0.1, o, check).violations);
}

}  // namespace

BENCHMARK(BM_verify_trace)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_verify_trace_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lambda_path)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lambda_path_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_coverage)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_coverage_serial)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
