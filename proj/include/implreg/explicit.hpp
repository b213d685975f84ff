#pragma once

#include <optional>
#include <string>
#include <vector>

#include "implreg/glm.hpp"
#include "implreg/objective.hpp"

namespace implreg {

struct RegularizedSolution {
  double lambda = 0.0;
  Vec theta;
  Vec log_theta;           ///< KL solves only: log weights, exact where theta underflows
  double loss = 0.0;       ///< unregularized objective at theta
  double penalty = 0.0;    ///< unscaled penalty g(theta)
  double objective = 0.0;  ///< loss + lambda * penalty
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;   ///< gradient norm (ridge) or KKT residual (kl, lasso)
  bool saturated = false;  ///< Poisson curvature clamp active at the solution
  std::string message;
};

struct SolverOptions {
  double tolerance = 1e-10;
  int max_iter = 500;
};

struct RidgeOptions : SolverOptions {
  std::optional<Vec> center;      ///< penalty lambda ||theta - center||^2; zero when empty
  std::optional<Vec> warm_start;
};

struct KlOptions : SolverOptions {
  std::optional<Vec> warm_start_log;  ///< initial log weights
  KlOptions() { tolerance = 1e-9; }
};

/// min f(theta) + lambda ||theta - center||^2 by damped Newton with Armijo halving.
RegularizedSolution ridge_solve(const Objective& f, double lambda, const RidgeOptions& options = {});
RegularizedSolution ridge_glm_solve(const GlmProblem& problem, double lambda, const RidgeOptions& options = {});

/// min over the simplex of f(theta) + lambda KL(theta, anchor). Newton iterations
/// in log-weight coordinates with the simplex constraint linearized.
RegularizedSolution kl_solve(const Objective& f, double lambda, const Vec& anchor, const KlOptions& options = {});
RegularizedSolution kl_glm_solve(const GlmProblem& problem, double lambda, const Vec& anchor,
                                 const KlOptions& options = {});

/// Gaussian family only: min loss(theta) + lambda ||theta||_1 by coordinate descent.
RegularizedSolution lasso_solve(const GlmProblem& problem, double lambda, const SolverOptions& options = {});
/// (1/2n) ||Y - X theta||^2 + l1 ||theta||_1 + l2 ||theta||_2^2.
double elastic_net_objective(const Mat& x, const Vec& y, const Vec& theta, double l1, double l2);

struct LambdaGrid {
  double min = 1e-4;
  double max = 1e4;
  int count = 500;
  /// Ascending, log-spaced.
  std::vector<double> values() const;
  /// "min:max:count".
  static LambdaGrid parse(const std::string& text);
};

enum class PathSolver { ridge, kl, lasso };

struct PathOptions {
  PathSolver solver = PathSolver::ridge;
  SolverOptions solver_options;
  std::optional<Vec> anchor;  ///< KL anchor (uniform when empty)
  std::optional<Vec> center;  ///< ridge center (zero when empty)
  int chunks = 8;             ///< parallel version: independent warm-start chains
  double monotone_tolerance = 1e-8;
};

struct PathResult {
  std::vector<RegularizedSolution> points;  ///< ascending lambda
  bool monotone = true;
  double max_monotone_violation = 0.0;
  int nonconverged = 0;

  void write_csv(const std::string& path) const;
};

/// Solves along decreasing lambda with warm starts. Chunk seeds are solved in
/// sequence; chunk interiors run concurrently. Output does not depend on thread count.
PathResult lambda_path_solve(const GlmProblem& problem, const LambdaGrid& grid, const PathOptions& options = {});
/// Single warm-started chain over the whole grid.
PathResult lambda_path_solve_serial(const GlmProblem& problem, const LambdaGrid& grid,
                                    const PathOptions& options = {});

/// Checks lambda -> loss + lambda * penalty is non-decreasing along an ascending path.
void check_path_monotone(PathResult& result, double tolerance);

}  // namespace implreg
