#include "implreg/explicit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "implreg/csv.hpp"
#include "implreg/geometry.hpp"

namespace implreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Objective value, or +inf when the point saturates or leaves the domain.
template <class Fn>
double guarded(Fn&& fn) {
  try {
    const double v = fn();
    return std::isfinite(v) ? v : kInf;
  } catch (const SaturationError&) {
    return kInf;
  } catch (const DomainError&) {
    return kInf;
  }
}

Vec solve_spd(const Mat& h, const Vec& rhs) {
  Eigen::LLT<Mat> llt(h);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  Eigen::LDLT<Mat> ldlt(h);
  return ldlt.solve(rhs);
}

double log_sum_exp(const Vec& u) {
  const double m = u.maxCoeff();
  return m + std::log((u.array() - m).exp().sum());
}

}  // namespace

RegularizedSolution ridge_solve(const Objective& f, double lambda, const RidgeOptions& options) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_solve: lambda must be nonnegative");
  const Index d = f.dim();
  const Vec c = options.center ? *options.center : Vec::Zero(d);
  require_same_size(d, c.size(), "ridge center");
  Vec theta = options.warm_start ? *options.warm_start : c;
  require_same_size(d, theta.size(), "ridge warm start");

  auto objective = [&](const Vec& th) { return guarded([&] { return f.value(th) + lambda * (th - c).squaredNorm(); }); };

  RegularizedSolution sol;
  sol.lambda = lambda;
  Vec g(d);
  double fval = objective(theta);
  if (!std::isfinite(fval)) {
    theta = c;
    fval = objective(theta);
  }
  // Absolute tolerance, floored at the roundoff level of the two gradient terms.
  auto residual = [&](const Vec& th, Vec& grad) {
    f.gradient_into(th, grad);
    const double scale = std::max(grad.norm(), 2.0 * lambda * (th - c).norm());
    grad += 2.0 * lambda * (th - c);
    return std::pair{grad.norm(), std::max(options.tolerance, 1e-14 * scale)};
  };
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const auto [res, tol] = residual(theta, g);
    sol.residual = res;
    if (res <= tol) {
      sol.converged = true;
      break;
    }
    Mat h = f.hessian(theta);
    h.diagonal().array() += 2.0 * lambda;
    Vec step = -solve_spd(h, g);
    double slope = g.dot(step);
    if (!step.allFinite() || slope >= 0.0) {
      step = -g;
      slope = -g.squaredNorm();
    }
    if (-slope <= 1e-13 * std::max(1.0, std::abs(fval))) {
      // objective changes are at roundoff; take the Newton step if it shrinks the gradient
      Vec trial = theta + step, gt(d);
      const double tv = objective(trial);
      if (!std::isfinite(tv) || !(residual(trial, gt).first < res)) {
        sol.message = "residual floor";
        break;
      }
      theta = std::move(trial);
      fval = tv;
      continue;
    }
    double s = 1.0;
    double trial_val = kInf;
    Vec trial;
    for (int ls = 0; ls < 60; ++ls) {
      trial = theta + s * step;
      trial_val = objective(trial);
      if (trial_val <= fval + 1e-4 * s * slope) break;
      s *= 0.5;
    }
    if (!(trial_val <= fval + 1e-4 * s * slope)) {
      // No Armijo progress left: accept only when the change is at roundoff level.
      if (trial_val <= fval + 1e-14 * std::max(1.0, std::abs(fval)) && std::isfinite(trial_val)) {
        theta = trial;
        fval = trial_val;
      }
      const auto [r2, t2] = residual(theta, g);
      sol.residual = r2;
      sol.converged = r2 <= t2;
      sol.message = "line search stalled";
      break;
    }
    theta = std::move(trial);
    fval = trial_val;
  }
  sol.iterations = it;
  sol.theta = theta;
  sol.loss = f.value(theta);
  sol.penalty = (theta - c).squaredNorm();
  sol.objective = sol.loss + lambda * sol.penalty;
  if (!sol.converged && sol.message.empty()) sol.message = "max_iter reached";
  return sol;
}

RegularizedSolution ridge_glm_solve(const GlmProblem& problem, double lambda, const RidgeOptions& options) {
  const GlmObjective f(problem);
  RegularizedSolution sol = ridge_solve(f, lambda, options);
  if (problem.family().kind == Family::poisson) {
    bool clamped = false;
    try {
      loss_hessian(problem, sol.theta, &clamped);
    } catch (const SaturationError&) {
      clamped = true;
    }
    sol.saturated = clamped;
  }
  return sol;
}

RegularizedSolution kl_solve(const Objective& f, double lambda, const Vec& anchor, const KlOptions& options) {
  if (!(lambda > 0.0)) throw std::invalid_argument("kl_solve: lambda must be positive");
  const Index d = f.dim();
  require_same_size(d, anchor.size(), "kl anchor");
  if (!(anchor.array() > 0.0).all()) throw std::invalid_argument("kl_solve: anchor must be strictly positive");
  const Vec log_z = (anchor / anchor.sum()).array().log().matrix();

  Vec u = options.warm_start_log ? *options.warm_start_log : log_z;
  require_same_size(d, u.size(), "kl warm start");
  auto normalize = [](Vec& v) { v.array() -= log_sum_exp(v); };
  normalize(u);

  auto objective = [&](const Vec& uu) {
    const Vec th = uu.array().exp().matrix();
    return guarded([&] { return f.value(th) + lambda * th.dot(uu - log_z); });
  };

  RegularizedSolution sol;
  sol.lambda = lambda;
  Vec theta = u.array().exp().matrix();
  double fval = objective(u);
  Vec g(d);
  // Gradient in log coordinates is theta * (g - theta^T g); the residual is its
  // unweighted form, with the tolerance floored at the roundoff of the terms.
  auto residual = [&](const Vec& uu, Vec& out) {
    const Vec th = uu.array().exp().matrix();
    f.gradient_into(th, out);
    const Vec pen = lambda * (uu - log_z + Vec::Ones(d));
    const double scale = out.cwiseAbs().maxCoeff() + pen.cwiseAbs().maxCoeff();
    out += pen;
    return std::pair{(out.array() - th.dot(out)).abs().maxCoeff(), std::max(options.tolerance, 1e-14 * scale)};
  };
  int it = 0;
  for (; it < options.max_iter; ++it) {
    theta = u.array().exp().matrix();
    const auto [res, tol] = residual(u, g);
    sol.residual = res;
    if (res <= tol) {
      sol.converged = true;
      break;
    }
    const double nu_bar = theta.dot(g);
    Mat k = Mat::Zero(d, d);
    if (f.has_hessian()) k = f.hessian(theta) * theta.asDiagonal();
    k.diagonal().array() += lambda;
    Eigen::PartialPivLU<Mat> lu(k);
    const Vec a = lu.solve(g);
    const Vec b = lu.solve(Vec::Ones(d));
    const double nu = theta.dot(a) / theta.dot(b);
    Vec delta = -(a - nu * b);
    double slope = (theta.array() * (g.array() - nu_bar) * delta.array()).sum();
    if (!delta.allFinite() || slope >= 0.0) {
      delta = -(g.array() - nu_bar).matrix() / lambda;
      slope = (theta.array() * (g.array() - nu_bar) * delta.array()).sum();
    }
    const double dmax = delta.cwiseAbs().maxCoeff();
    double s = dmax > 1e4 ? 1e4 / dmax : 1.0;
    if (-slope <= 1e-13 * std::max(1.0, std::abs(fval))) {
      // objective differences are at roundoff; accept a Newton step if it shrinks the residual
      Vec trial = u + s * delta, gt(d);
      normalize(trial);
      if (!(residual(trial, gt).first < res)) {
        sol.message = "residual floor";
        break;
      }
      u = std::move(trial);
      fval = objective(u);
      continue;
    }
    Vec trial;
    double trial_val = kInf;
    for (int ls = 0; ls < 80; ++ls) {
      trial = u + s * delta;
      normalize(trial);
      trial_val = objective(trial);
      if (trial_val <= fval + 1e-4 * s * slope) break;
      s *= 0.5;
    }
    if (!(trial_val <= fval + 1e-4 * s * slope)) {
      if (std::isfinite(trial_val) && trial_val <= fval) {
        u = trial;
        fval = trial_val;
      }
      sol.message = "line search stalled";
      ++it;
      const auto [r2, t2] = residual(u, g);
      sol.residual = r2;
      sol.converged = r2 <= t2;
      break;
    }
    u = std::move(trial);
    fval = trial_val;
  }
  sol.iterations = it;
  sol.log_theta = u;
  sol.theta = u.array().exp().matrix();
  sol.loss = f.value(sol.theta);
  sol.penalty = std::max(0.0, sol.theta.dot(u - log_z));
  sol.objective = sol.loss + lambda * sol.penalty;
  if (!sol.converged && sol.message.empty()) sol.message = "max_iter reached";
  return sol;
}

RegularizedSolution kl_glm_solve(const GlmProblem& problem, double lambda, const Vec& anchor,
                                 const KlOptions& options) {
  const GlmObjective f(problem);
  return kl_solve(f, lambda, anchor, options);
}

RegularizedSolution lasso_solve(const GlmProblem& problem, double lambda, const SolverOptions& options) {
  if (problem.family().kind != Family::gaussian) throw std::invalid_argument("lasso_solve: Gaussian family only");
  if (lambda < 0.0) throw std::invalid_argument("lasso_solve: negative lambda");
  const Mat& x = problem.x();
  const Index n = problem.n(), d = problem.d();
  const double nn = static_cast<double>(n);
  const Vec sq = problem.design().column_norms().array().square().matrix() / nn;
  Vec theta = Vec::Zero(d);
  Vec r = problem.y();
  RegularizedSolution sol;
  sol.lambda = lambda;
  auto kkt = [&]() {
    const Vec g = -x.transpose() * r / nn;
    double worst = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double v = theta(j) != 0.0 ? std::abs(g(j) + lambda * (theta(j) > 0 ? 1.0 : -1.0))
                                       : std::max(0.0, std::abs(g(j)) - lambda);
      worst = std::max(worst, v);
    }
    return worst;
  };
  const int max_sweeps = std::max(options.max_iter, 100000);
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (sq(j) == 0.0) continue;
      const double zj = x.col(j).dot(r) / nn + sq(j) * theta(j);
      const double a = std::abs(zj) - lambda;
      const double nj = a > 0.0 ? std::copysign(a, zj) / sq(j) : 0.0;
      const double delta = nj - theta(j);
      if (delta != 0.0) {
        r.noalias() -= delta * x.col(j);
        theta(j) = nj;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change <= options.tolerance * 1e-2) {
      r = problem.y() - x * theta;
      sol.residual = kkt();
      if (sol.residual <= options.tolerance) {
        sol.converged = true;
        ++sweep;
        break;
      }
    }
  }
  r = problem.y() - x * theta;
  sol.residual = kkt();
  sol.converged = sol.residual <= options.tolerance;
  sol.iterations = sweep;
  sol.theta = theta;
  sol.loss = loss(problem, theta);
  sol.penalty = theta.lpNorm<1>();
  sol.objective = sol.loss + lambda * sol.penalty;
  if (!sol.converged) sol.message = "max sweeps reached";
  return sol;
}

double elastic_net_objective(const Mat& x, const Vec& y, const Vec& theta, double l1, double l2) {
  require_same_size(x.cols(), theta.size(), "theta");
  return 0.5 * (y - x * theta).squaredNorm() / static_cast<double>(x.rows()) + l1 * theta.lpNorm<1>() +
         l2 * theta.squaredNorm();
}

std::vector<double> LambdaGrid::values() const {
  if (!(min > 0.0) || !(max >= min) || count < 1) throw std::invalid_argument("LambdaGrid: need 0 < min <= max, count >= 1");
  std::vector<double> v(static_cast<std::size_t>(count));
  if (count == 1) {
    v[0] = min;
    return v;
  }
  const double a = std::log10(min), b = std::log10(max);
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  v.front() = min;
  v.back() = max;
  return v;
}

LambdaGrid LambdaGrid::parse(const std::string& text) {
  const auto parts = csv::split_line(text, ':');
  LambdaGrid g;
  double c;
  if (parts.size() != 3 || !csv::parse_double(parts[0], g.min) || !csv::parse_double(parts[1], g.max) ||
      !csv::parse_double(parts[2], c) || c != std::floor(c))
    throw std::invalid_argument("bad lambda grid '" + text + "', expected min:max:count");
  g.count = static_cast<int>(c);
  g.values();
  return g;
}

void PathResult::write_csv(const std::string& path) const {
  auto out = csv::open_output(path);
  const Index d = points.empty() ? 0 : points.front().theta.size();
  out << "lambda,objective,penalty,converged";
  for (Index j = 0; j < d; ++j) out << ",theta_" << j;
  out << "\n";
  for (const auto& p : points) {
    out << csv::format_double(p.lambda) << ',' << csv::format_double(p.objective) << ','
        << csv::format_double(p.penalty) << ',' << (p.converged ? 1 : 0);
    for (Index j = 0; j < d; ++j) out << ',' << csv::format_double(p.theta(j));
    out << "\n";
  }
}

void check_path_monotone(PathResult& result, double tolerance) {
  result.monotone = true;
  result.max_monotone_violation = 0.0;
  result.nonconverged = 0;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    if (!result.points[i].converged) ++result.nonconverged;
    if (i == 0) continue;
    const double drop = result.points[i - 1].objective - result.points[i].objective;
    result.max_monotone_violation = std::max(result.max_monotone_violation, drop);
  }
  result.monotone = result.max_monotone_violation <= tolerance;
}

namespace {

/// One warm-started solve; prev may be null.
RegularizedSolution path_point(const GlmProblem& problem, double lambda, const PathOptions& opt, const Vec& anchor,
                               const RegularizedSolution* prev) {
  switch (opt.solver) {
    case PathSolver::ridge: {
      RidgeOptions ro;
      static_cast<SolverOptions&>(ro) = opt.solver_options;
      ro.center = opt.center;
      if (prev) ro.warm_start = prev->theta;
      return ridge_glm_solve(problem, lambda, ro);
    }
    case PathSolver::kl: {
      KlOptions ko;
      static_cast<SolverOptions&>(ko) = opt.solver_options;
      if (prev) ko.warm_start_log = prev->log_theta;
      return kl_glm_solve(problem, lambda, anchor, ko);
    }
    case PathSolver::lasso:
      return lasso_solve(problem, lambda, opt.solver_options);
  }
  throw std::invalid_argument("unknown path solver");
}

Vec path_anchor(const GlmProblem& problem, const PathOptions& opt) {
  if (opt.anchor) return *opt.anchor;
  return Vec::Constant(problem.d(), 1.0 / static_cast<double>(problem.d()));
}

}  // namespace

PathResult lambda_path_solve_serial(const GlmProblem& problem, const LambdaGrid& grid, const PathOptions& options) {
  const auto lambdas = grid.values();
  const Vec anchor = path_anchor(problem, options);
  PathResult res;
  res.points.resize(lambdas.size());
  const RegularizedSolution* prev = nullptr;
  for (std::size_t k = lambdas.size(); k-- > 0;) {
    res.points[k] = path_point(problem, lambdas[k], options, anchor, prev);
    prev = &res.points[k];
  }
  check_path_monotone(res, options.monotone_tolerance);
  return res;
}

PathResult lambda_path_solve(const GlmProblem& problem, const LambdaGrid& grid, const PathOptions& options) {
  const auto lambdas = grid.values();
  const Vec anchor = path_anchor(problem, options);
  const long m = static_cast<long>(lambdas.size());
  const long chunks = std::max(1L, std::min<long>(options.chunks, m));
  PathResult res;
  res.points.resize(lambdas.size());
  // Chunk c covers descending positions [c*m/chunks, (c+1)*m/chunks).
  auto desc = [&](long pos) { return static_cast<std::size_t>(m - 1 - pos); };
  std::vector<long> start(static_cast<std::size_t>(chunks + 1));
  for (long c = 0; c <= chunks; ++c) start[static_cast<std::size_t>(c)] = c * m / chunks;
  const RegularizedSolution* prev = nullptr;
  for (long c = 0; c < chunks; ++c) {
    const std::size_t k = desc(start[static_cast<std::size_t>(c)]);
    res.points[k] = path_point(problem, lambdas[k], options, anchor, prev);
    prev = &res.points[k];
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (long c = 0; c < chunks; ++c) {
    const RegularizedSolution* p = &res.points[desc(start[static_cast<std::size_t>(c)])];
    for (long pos = start[static_cast<std::size_t>(c)] + 1; pos < start[static_cast<std::size_t>(c + 1)]; ++pos) {
      const std::size_t k = desc(pos);
      res.points[k] = path_point(problem, lambdas[k], options, anchor, p);
      p = &res.points[k];
    }
  }
  check_path_monotone(res, options.monotone_tolerance);
  return res;
}

}  // namespace implreg
