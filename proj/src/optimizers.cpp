#include "implreg/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "implreg/csv.hpp"

namespace implreg {

// ---- objectives ----

Mat Objective::hessian(const Vec&) const {
  throw std::logic_error("objective has no Hessian");
}

GlmObjective::GlmObjective(std::shared_ptr<const GlmProblem> problem) : problem_(std::move(problem)) {}
GlmObjective::GlmObjective(const GlmProblem& problem)
    : problem_(std::make_shared<const GlmProblem>(problem)) {}

void GlmObjective::gradient_into(const Vec& theta, Vec& grad) const {
  loss_and_gradient(*problem_, theta, grad);
}

double GlmObjective::value_and_gradient(const Vec& theta, Vec& grad) const {
  return loss_and_gradient(*problem_, theta, grad);
}

LeastSquaresObjective::LeastSquaresObjective(Mat x, Vec y) : x_(std::move(x)), y_(std::move(y)) {
  require_same_size(x_.rows(), y_.size(), "LeastSquaresObjective");
  gram_ = x_.transpose() * x_ / static_cast<double>(x_.rows());
}

double LeastSquaresObjective::value(const Vec& theta) const {
  require_same_size(x_.cols(), theta.size(), "theta");
  return 0.5 * (y_ - x_ * theta).squaredNorm() / static_cast<double>(x_.rows());
}

void LeastSquaresObjective::gradient_into(const Vec& theta, Vec& grad) const {
  require_same_size(x_.cols(), theta.size(), "theta");
  const Vec r = x_ * theta - y_;
  grad.noalias() = x_.transpose() * r / static_cast<double>(x_.rows());
}

double LeastSquaresObjective::value_and_gradient(const Vec& theta, Vec& grad) const {
  require_same_size(x_.cols(), theta.size(), "theta");
  const Vec r = x_ * theta - y_;
  const double n = static_cast<double>(x_.rows());
  grad.noalias() = x_.transpose() * r / n;
  return 0.5 * r.squaredNorm() / n;
}

double LeastSquaresObjective::smoothness() const { return covariance_operator_norm(x_); }

PlipObjective::PlipObjective(Mat x, Vec y) : x_(std::move(x)), y_(std::move(y)) {
  require_same_size(x_.rows(), y_.size(), "PlipObjective");
  if (!(x_.array() > 0.0).all()) throw std::invalid_argument("PlipObjective: X must be strictly positive");
  if (!(y_.array() > 0.0).all()) throw std::invalid_argument("PlipObjective: Y must be strictly positive");
}

double PlipObjective::value(const Vec& theta) const {
  require_same_size(x_.cols(), theta.size(), "theta");
  const Vec m = x_ * theta;
  if (!(m.array() > 0.0).all()) throw DomainError("PLIP objective: X theta not positive");
  const auto r = y_.array() / m.array();
  return (y_.array() * r.log() + m.array() - y_.array()).sum() / static_cast<double>(x_.rows());
}

void PlipObjective::gradient_into(const Vec& theta, Vec& grad) const {
  require_same_size(x_.cols(), theta.size(), "theta");
  const Vec m = x_ * theta;
  if (!(m.array() > 0.0).all()) throw DomainError("PLIP gradient: X theta not positive");
  const Vec w = (1.0 - y_.array() / m.array()).matrix();
  grad.noalias() = x_.transpose() * w / static_cast<double>(x_.rows());
}

Mat PlipObjective::hessian(const Vec& theta) const {
  const Vec m = x_ * theta;
  const Vec w = (y_.array() / m.array().square()).matrix();
  return x_.transpose() * w.asDiagonal() * x_ / static_cast<double>(x_.rows());
}

LassoObjective::LassoObjective(std::shared_ptr<const LeastSquaresObjective> smooth, double l1_weight)
    : smooth_(std::move(smooth)), l1_(l1_weight) {
  if (l1_ < 0.0) throw std::invalid_argument("LassoObjective: negative l1 weight");
}

double LassoObjective::value(const Vec& theta) const {
  return smooth_->value(theta) + l1_ * theta.lpNorm<1>();
}

Mat FunctionObjective::hessian(const Vec& theta) const {
  if (!hess_) return Objective::hessian(theta);
  return hess_(theta);
}

// ---- helpers ----

Vec project_ball(const Vec& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be positive");
  const double nv = v.norm();
  if (nv <= radius) return v;
  return v * (radius / nv);
}

Vec soft_threshold(const Vec& v, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  Vec out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    const double a = std::abs(v(j)) - threshold;
    out(j) = a > 0.0 ? std::copysign(a, v(j)) : 0.0;
  }
  return out;
}

std::size_t IterateTrace::nearest_record(double target_tau) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tau.size(); ++k) {
    if (tau[k] <= 0.0) continue;
    const double dist = std::abs(std::log(tau[k] / target_tau));
    if (dist < best_d) {
      best_d = dist;
      best = k;
    }
  }
  return best;
}

void IterateTrace::write_csv(const std::string& path, bool with_theta) const {
  auto out = csv::open_output(path);
  out << "t,tau,objective";
  const Index d = iterates.empty() ? 0 : iterates.front().size();
  if (with_theta)
    for (Index j = 0; j < d; ++j) out << ",theta_" << j;
  out << "\n";
  for (std::size_t k = 0; k < size(); ++k) {
    out << t[k] << ',' << csv::format_double(tau[k]) << ',' << csv::format_double(objective[k]);
    if (with_theta)
      for (Index j = 0; j < d; ++j) out << ',' << csv::format_double(iterates[k](j));
    out << "\n";
  }
}

namespace {

void validate_steps(IterateTrace& trace, const StepSchedule& schedule, const std::optional<double>& smoothness,
                    double alpha) {
  if (!smoothness) {
    trace.warnings.push_back("step sizes not validated: no smoothness constant supplied");
    return;
  }
  const double limit = alpha / *smoothness;
  for (const auto& p : schedule.phases()) {
    if (p.eta > limit * (1.0 + 1e-12)) {
      throw std::invalid_argument("step size " + csv::format_double(p.eta) + " exceeds alpha/L = " +
                                  csv::format_double(limit));
    }
  }
}

/// Shared driver. step(theta, eta, t) advances theta in place; value(theta)
/// evaluates the recorded objective.
template <class Step, class Value>
IterateTrace run_loop(std::string tag, const Vec& theta0, const StepSchedule& schedule,
                      const RunOptions& options, IterateTrace trace, Step&& step, Value&& value) {
  trace.algorithm = std::move(tag);
  trace.schedule = schedule;
  const RecordPolicy& rec = options.record;
  std::set<long> forced(rec.checkpoints.begin(), rec.checkpoints.end());
  for (long b : schedule.boundaries()) forced.insert(b);
  const long total = schedule.total_iterations();

  auto push = [&](long t, double tau, const Vec& theta) {
    trace.t.push_back(t);
    trace.tau.push_back(tau);
    trace.objective.push_back(value(theta));
    trace.iterates.push_back(theta);
  };

  Vec theta = theta0;
  push(0, 0.0, theta);
  double last_tau = 0.0;
  long t = 0;
  double phase_base = 0.0;
  for (const auto& phase : schedule.phases()) {
    for (long k = 0; k < phase.count; ++k) {
      step(theta, phase.eta, t);
      ++t;
      const double tau = phase_base + static_cast<double>(k + 1) * phase.eta;
      bool keep = t == total || forced.count(t) > 0;
      switch (rec.mode) {
        case RecordPolicy::Mode::all: keep = true; break;
        case RecordPolicy::Mode::stride: keep = keep || (t % std::max(1L, rec.stride) == 0); break;
        case RecordPolicy::Mode::geometric:
          keep = keep || t <= rec.dense_prefix || tau >= last_tau * (1.0 + rec.growth);
          break;
      }
      if (keep) {
        push(t, tau, theta);
        last_tau = tau;
      }
    }
    phase_base += static_cast<double>(phase.count) * phase.eta;
  }
  return trace;
}

void check_gradient(const Vec& g, long t) {
  if (!g.allFinite()) throw DomainError("non-finite gradient at iteration " + std::to_string(t), t);
}

void check_dim(const Objective& f, const Vec& theta0) { require_same_size(f.dim(), theta0.size(), "theta0"); }

template <class Fn>
void with_iteration(long t, Fn&& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    if (e.iteration() >= 0) throw;
    throw DomainError(std::string(e.what()) + " at iteration " + std::to_string(t), t);
  } catch (const SaturationError& e) {
    throw DomainError(std::string(e.what()) + " at iteration " + std::to_string(t), t);
  }
}

const EntropyGeometry kEntropy;
const BurgGeometry kBurg;

}  // namespace

IterateTrace gd_run(const Objective& f, const Vec& theta0, const StepSchedule& schedule, const RunOptions& options) {
  check_dim(f, theta0);
  require_finite(theta0, "theta0");
  IterateTrace trace;
  validate_steps(trace, schedule, options.smoothness, 1.0);
  Vec g(theta0.size());
  return run_loop(
      "gd", theta0, schedule, options, std::move(trace),
      [&](Vec& theta, double eta, long t) {
        with_iteration(t, [&] { f.gradient_into(theta, g); });
        check_gradient(g, t);
        theta.noalias() -= eta * g;
      },
      [&](const Vec& theta) { return f.value(theta); });
}

IterateTrace projected_gd_run(const Objective& f, const Vec& theta0, const StepSchedule& schedule, double radius,
                              const RunOptions& options) {
  check_dim(f, theta0);
  const EuclideanGeometry ball(radius);
  if (theta0.norm() > radius) throw std::invalid_argument("projected_gd_run: theta0 outside the ball");
  IterateTrace trace;
  validate_steps(trace, schedule, options.smoothness, 1.0);
  Vec g(theta0.size());
  return run_loop(
      "projected_gd", theta0, schedule, options, std::move(trace),
      [&](Vec& theta, double eta, long t) {
        with_iteration(t, [&] { f.gradient_into(theta, g); });
        check_gradient(g, t);
        ball.mirror_step(theta, g, eta);
      },
      [&](const Vec& theta) { return f.value(theta); });
}

IterateTrace egd_run(const Objective& f, const Vec& theta0, const StepSchedule& schedule, const RunOptions& options) {
  check_dim(f, theta0);
  if (!(theta0.array() > 0.0).all()) throw std::invalid_argument("egd_run: theta0 must be strictly positive");
  if (std::abs(theta0.sum() - 1.0) > 1e-10) throw std::invalid_argument("egd_run: theta0 must sum to 1");
  IterateTrace trace;
  validate_steps(trace, schedule, options.smoothness, 1.0);
  Vec g(theta0.size());
  return run_loop(
      "egd", theta0, schedule, options, std::move(trace),
      [&](Vec& theta, double eta, long t) {
        with_iteration(t, [&] { f.gradient_into(theta, g); });
        check_gradient(g, t);
        kEntropy.mirror_step(theta, g, eta);
      },
      [&](const Vec& theta) { return f.value(theta); });
}

IterateTrace mirror_descent_run(const Objective& f, const BregmanGeometry& geometry, const Vec& theta0,
                                const StepSchedule& schedule, const RunOptions& options) {
  check_dim(f, theta0);
  if (!geometry.interior(theta0))
    throw std::invalid_argument("mirror_descent_run: theta0 not in the interior of the " + geometry.name() + " domain");
  IterateTrace trace;
  validate_steps(trace, schedule, options.smoothness, geometry.strong_convexity().value_or(1.0));
  Vec g(theta0.size());
  return run_loop(
      "md_" + geometry.name(), theta0, schedule, options, std::move(trace),
      [&](Vec& theta, double eta, long t) {
        with_iteration(t, [&] {
          f.gradient_into(theta, g);
          check_gradient(g, t);
          geometry.mirror_step(theta, g, eta);
        });
        if (!geometry.interior(theta))
          throw DomainError("iterate left the domain interior at iteration " + std::to_string(t + 1), t + 1);
      },
      [&](const Vec& theta) { return f.value(theta); });
}

IterateTrace ista_run(const LeastSquaresObjective& g, double l1_weight, const Vec& theta0,
                      const StepSchedule& schedule, const RunOptions& options) {
  if (l1_weight < 0.0) throw std::invalid_argument("ista_run: negative l1 weight");
  check_dim(g, theta0);
  IterateTrace trace;
  validate_steps(trace, schedule, options.smoothness, 1.0);
  Vec grad(theta0.size());
  return run_loop(
      "ista", theta0, schedule, options, std::move(trace),
      [&](Vec& theta, double eta, long t) {
        g.gradient_into(theta, grad);
        check_gradient(grad, t);
        theta.noalias() -= eta * grad;
        if (l1_weight > 0.0) theta = soft_threshold(theta, eta * l1_weight);
      },
      [&](const Vec& theta) { return g.value(theta) + l1_weight * theta.lpNorm<1>(); });
}

IterateTrace nolips_run(const PlipObjective& f, const Vec& theta0, const StepSchedule& schedule, RunOptions options) {
  check_dim(f, theta0);
  if (!(theta0.array() > 0.0).all()) throw std::invalid_argument("nolips_run: theta0 must be strictly positive");
  if (!options.smoothness) options.smoothness = f.relative_smoothness();
  IterateTrace trace;
  validate_steps(trace, schedule, options.smoothness, 1.0);
  Vec g(theta0.size());
  return run_loop(
      "nolips", theta0, schedule, options, std::move(trace),
      [&](Vec& theta, double eta, long t) {
        with_iteration(t, [&] {
          f.gradient_into(theta, g);
          check_gradient(g, t);
          kBurg.mirror_step(theta, g, eta);
        });
      },
      [&](const Vec& theta) { return f.value(theta); });
}

}  // namespace implreg
