#pragma once

#include <optional>
#include <string>
#include <vector>

#include "implreg/geometry.hpp"
#include "implreg/objective.hpp"
#include "implreg/schedule.hpp"

namespace implreg {

/// Which iterates a run keeps. Geometric mode records every iterate up to
/// dense_prefix, then whenever tau has grown by the factor (1 + growth) since
/// the last record. Phase boundaries, t = 0 and the final iterate are always
/// kept, as are any listed checkpoints.
struct RecordPolicy {
  enum class Mode { all, geometric, stride } mode = Mode::geometric;
  long dense_prefix = 100;
  double growth = 0.01;
  long stride = 1;
  std::vector<long> checkpoints;

  static RecordPolicy every() {
    RecordPolicy p;
    p.mode = Mode::all;
    return p;
  }
  static RecordPolicy every_kth(long k) {
    RecordPolicy p;
    p.mode = Mode::stride;
    p.stride = k;
    return p;
  }
};

struct RunOptions {
  RecordPolicy record;
  /// Smoothness constant (relative smoothness for NoLips). When set, every
  /// step is checked against alpha / L and a violation throws.
  std::optional<double> smoothness;
};

struct IterateTrace {
  std::string algorithm;
  StepSchedule schedule;
  std::vector<long> t;
  std::vector<double> tau;
  std::vector<double> objective;
  std::vector<Vec> iterates;
  std::vector<std::string> warnings;

  std::size_t size() const { return t.size(); }
  const Vec& initial() const { return iterates.front(); }
  const Vec& final_iterate() const { return iterates.back(); }
  /// Index of the record whose tau is closest to target in log scale.
  std::size_t nearest_record(double target_tau) const;
  /// Columns t, tau, objective and, when with_theta, theta_0..theta_{d-1}.
  void write_csv(const std::string& path, bool with_theta = false) const;
};

Vec project_ball(const Vec& v, double radius);
Vec soft_threshold(const Vec& v, double threshold);

IterateTrace gd_run(const Objective& f, const Vec& theta0, const StepSchedule& schedule,
                    const RunOptions& options = {});
IterateTrace projected_gd_run(const Objective& f, const Vec& theta0, const StepSchedule& schedule,
                              double radius, const RunOptions& options = {});
IterateTrace egd_run(const Objective& f, const Vec& theta0, const StepSchedule& schedule,
                     const RunOptions& options = {});
IterateTrace mirror_descent_run(const Objective& f, const BregmanGeometry& geometry, const Vec& theta0,
                                const StepSchedule& schedule, const RunOptions& options = {});
/// Proximal gradient on g + l1_weight ||.||_1. Recorded objective values are the composite.
IterateTrace ista_run(const LeastSquaresObjective& g, double l1_weight, const Vec& theta0,
                      const StepSchedule& schedule, const RunOptions& options = {});
/// Bregman gradient under the Burg potential. options.smoothness defaults to ||Y||_1.
IterateTrace nolips_run(const PlipObjective& f, const Vec& theta0, const StepSchedule& schedule,
                        RunOptions options = {});

}  // namespace implreg
