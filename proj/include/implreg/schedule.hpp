#pragma once

#include <string>
#include <utility>
#include <vector>

namespace implreg {

/// Piecewise-constant step sizes: phases of (eta, count).
class StepSchedule {
 public:
  struct Phase {
    double eta;
    long count;
  };

  StepSchedule() = default;
  explicit StepSchedule(std::vector<Phase> phases);
  static StepSchedule constant(double eta, long count);
  /// Parses "eta:count,eta:count,...".
  static StepSchedule parse(const std::string& text);

  const std::vector<Phase>& phases() const { return phases_; }
  long total_iterations() const { return total_; }
  /// Step used for the update from iteration t to t+1 (0-based).
  double eta_at(long t) const;
  /// Sum of the first t step sizes.
  double accumulated_time(long t) const;
  double total_time() const { return accumulated_time(total_); }
  double max_eta() const;
  /// Iteration indices at which a new phase starts, plus the final index.
  std::vector<long> boundaries() const;
  std::string format() const;

 private:
  std::vector<Phase> phases_;
  long total_ = 0;
};

}  // namespace implreg
