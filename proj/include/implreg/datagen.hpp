#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "implreg/glm.hpp"
#include "implreg/riskbounds.hpp"
#include "implreg/schedule.hpp"

namespace implreg {

enum class Task { linear, logistic, poisson };
enum class Algorithm { gd, egd };
enum class Regime { under, over };

std::string to_string(Task t);
std::string to_string(Algorithm a);
std::string to_string(Regime r);
GlmFamily family_of(Task t);

struct ExperimentPreset {
  Task task = Task::linear;
  Algorithm algorithm = Algorithm::gd;
  Regime regime = Regime::under;
  long n = 200;
  long d = 20;
  double gamma = 1.0;

  /// "<algorithm>-<task>-<regime>", e.g. "gd-linear-under".
  std::string name() const;
  /// One of the twelve published settings; throws on an unknown name.
  static ExperimentPreset named(const std::string& name);
  static std::vector<ExperimentPreset> all();
  /// The published learning-rate schedule for this setting.
  StepSchedule default_schedule() const;
};

/// Poisson means below this are raised to it.
inline constexpr double kPoissonMeanFloor = 1e-6;

struct GeneratedData {
  GlmProblem problem;
  Vec theta_true;
  std::vector<Index> clamped;  ///< Poisson samples whose mean was floored
};

/// X ~ N(0,1) entries; theta_true ~ Unif[-1,1] (gd) or Unif[0,1] normalized to
/// the simplex (egd); responses per task. Streams: 0 design, 1 theta, 2 response.
GeneratedData generate(const ExperimentPreset& preset, std::uint64_t seed);

/// Draws one response vector given the mean (linear: mean + gamma N(0,1)).
Vec sample_response(Task task, const Vec& mean, double gamma, CounterRng& rng);
ResponseSampler response_sampler(Task task, const Vec& mean, double gamma);

}  // namespace implreg
