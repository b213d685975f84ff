#include "implreg/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "implreg/csv.hpp"

namespace implreg {

StepSchedule::StepSchedule(std::vector<Phase> phases) : phases_(std::move(phases)) {
  for (const auto& p : phases_) {
    if (!(p.eta > 0.0) || !std::isfinite(p.eta)) throw std::invalid_argument("StepSchedule: step size must be positive");
    if (p.count < 1) throw std::invalid_argument("StepSchedule: iteration count must be >= 1");
    total_ += p.count;
  }
}

StepSchedule StepSchedule::constant(double eta, long count) {
  if (count == 0) return StepSchedule();
  return StepSchedule({{eta, count}});
}

StepSchedule StepSchedule::parse(const std::string& text) {
  std::vector<Phase> phases;
  for (const auto& item : csv::split_line(text, ',')) {
    if (item.empty()) throw std::invalid_argument("empty phase in schedule '" + text + "'");
    const auto parts = csv::split_line(item, ':');
    double eta, count;
    if (parts.size() != 2 || !csv::parse_double(parts[0], eta) || !csv::parse_double(parts[1], count) ||
        count != std::floor(count))
      throw std::invalid_argument("bad schedule phase '" + item + "', expected eta:count");
    phases.push_back({eta, static_cast<long>(count)});
  }
  if (phases.empty()) throw std::invalid_argument("empty schedule");
  return StepSchedule(std::move(phases));
}

double StepSchedule::eta_at(long t) const {
  long start = 0;
  for (const auto& p : phases_) {
    if (t < start + p.count) return p.eta;
    start += p.count;
  }
  throw std::out_of_range("StepSchedule::eta_at beyond schedule");
}

double StepSchedule::accumulated_time(long t) const {
  double tau = 0.0;
  long left = t;
  for (const auto& p : phases_) {
    const long k = std::min(left, p.count);
    tau += static_cast<double>(k) * p.eta;
    left -= k;
    if (left == 0) break;
  }
  if (left > 0) throw std::out_of_range("StepSchedule::accumulated_time beyond schedule");
  return tau;
}

double StepSchedule::max_eta() const {
  double m = 0.0;
  for (const auto& p : phases_) m = std::max(m, p.eta);
  return m;
}

std::vector<long> StepSchedule::boundaries() const {
  std::vector<long> b;
  long start = 0;
  for (const auto& p : phases_) {
    b.push_back(start);
    start += p.count;
  }
  b.push_back(start);
  return b;
}

std::string StepSchedule::format() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < phases_.size(); ++i) {
    if (i) os << ',';
    os << csv::format_double(phases_[i].eta) << ':' << phases_[i].count;
  }
  return os.str();
}

}  // namespace implreg
