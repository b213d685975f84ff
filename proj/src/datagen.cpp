#include "implreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace implreg {

std::string to_string(Task t) {
  switch (t) {
    case Task::linear: return "linear";
    case Task::logistic: return "logistic";
    case Task::poisson: return "poisson";
  }
  return "?";
}

std::string to_string(Algorithm a) { return a == Algorithm::gd ? "gd" : "egd"; }
std::string to_string(Regime r) { return r == Regime::under ? "under" : "over"; }

GlmFamily family_of(Task t) {
  switch (t) {
    case Task::linear: return {Family::gaussian};
    case Task::logistic: return {Family::bernoulli};
    case Task::poisson: return {Family::poisson};
  }
  return {};
}

std::string ExperimentPreset::name() const {
  return to_string(algorithm) + "-" + to_string(task) + "-" + to_string(regime);
}

std::vector<ExperimentPreset> ExperimentPreset::all() {
  struct Row {
    Task task;
    double gd_under, gd_over, egd_under, egd_over;
  };
  const Row rows[] = {{Task::linear, 5.0, 5.0, 1.0, 0.1},
                      {Task::logistic, 0.3, 0.5, 1.5, 10.0},
                      {Task::poisson, 0.1, 0.15, 1.2, 3.5}};
  std::vector<ExperimentPreset> out;
  for (const auto& r : rows) {
    out.push_back({r.task, Algorithm::gd, Regime::under, 200, 20, r.gd_under});
    out.push_back({r.task, Algorithm::gd, Regime::over, 100, 200, r.gd_over});
    out.push_back({r.task, Algorithm::egd, Regime::under, 200, 20, r.egd_under});
    out.push_back({r.task, Algorithm::egd, Regime::over, 30, 60, r.egd_over});
  }
  return out;
}

ExperimentPreset ExperimentPreset::named(const std::string& name) {
  for (const auto& p : all())
    if (p.name() == name) return p;
  throw std::invalid_argument("unknown preset: " + name);
}

StepSchedule ExperimentPreset::default_schedule() const {
  if (algorithm == Algorithm::egd) return StepSchedule::parse("1e-4:100000,1e-3:100000,1e-2:100000,1e-1:100000");
  if (task == Task::poisson && regime == Regime::over)
    return StepSchedule::parse("1e-4:100000,2e-4:200000,5e-4:2000000");
  return StepSchedule::parse("1e-4:10000,1e-3:100000,1e-2:100000");
}

Vec sample_response(Task task, const Vec& mean, double gamma, CounterRng& rng) {
  Vec y(mean.size());
  for (Index i = 0; i < mean.size(); ++i) {
    switch (task) {
      case Task::linear: y(i) = mean(i) + gamma * rng.normal(); break;
      case Task::logistic: y(i) = rng.uniform() < mean(i) ? 1.0 : 0.0; break;
      case Task::poisson: y(i) = static_cast<double>(rng.poisson(mean(i))); break;
    }
  }
  return y;
}

ResponseSampler response_sampler(Task task, const Vec& mean, double gamma) {
  return [task, mean, gamma](CounterRng& rng) { return sample_response(task, mean, gamma, rng); };
}

GeneratedData generate(const ExperimentPreset& p, std::uint64_t seed) {
  if (p.n < 1 || p.d < 1) throw std::invalid_argument("generate: n and d must be positive");
  if (p.gamma < 0.0) throw std::invalid_argument("generate: gamma must be nonnegative");
  CounterRng rx(seed, 0), rt(seed, 1), ry(seed, 2);
  Mat x(p.n, p.d);
  for (Index i = 0; i < p.n; ++i)
    for (Index j = 0; j < p.d; ++j) x(i, j) = rx.normal();
  Vec theta(p.d);
  if (p.algorithm == Algorithm::gd) {
    for (Index j = 0; j < p.d; ++j) theta(j) = rt.uniform(-1.0, 1.0);
  } else {
    for (Index j = 0; j < p.d; ++j) theta(j) = rt.uniform();
    theta /= theta.sum();
  }
  const Vec lin = x * theta;
  Vec mean(p.n);
  std::vector<Index> clamped;
  for (Index i = 0; i < p.n; ++i) {
    switch (p.task) {
      case Task::linear: mean(i) = lin(i); break;
      case Task::logistic: mean(i) = 1.0 / (1.0 + std::exp(-p.gamma * lin(i))); break;
      case Task::poisson:
        mean(i) = p.gamma * lin(i);
        if (mean(i) < kPoissonMeanFloor) {
          mean(i) = kPoissonMeanFloor;
          clamped.push_back(i);
        }
        break;
    }
  }
  Vec y = sample_response(p.task, mean, p.gamma, ry);
  GlmProblem problem(std::move(x), std::move(y), family_of(p.task), mean);
  return {std::move(problem), std::move(theta), std::move(clamped)};
}

}  // namespace implreg
