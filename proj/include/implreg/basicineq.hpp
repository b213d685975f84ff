#pragma once

#include <functional>
#include <string>
#include <vector>

#include "implreg/geometry.hpp"
#include "implreg/objective.hpp"
#include "implreg/optimizers.hpp"

namespace implreg {

/// (||theta0 - z||^2 - ||thetaT - z||^2) / (2 tau).
double gd_bound(const Vec& theta0, const Vec& thetaT, const Vec& z, double tau);
/// (D(z, theta0) - D(z, thetaT)) / tau.
double md_bound(const BregmanGeometry& geometry, const Vec& theta0, const Vec& thetaT, const Vec& z, double tau);
double divergence(const BregmanGeometry& geometry, const Vec& u, const Vec& v);

struct LedgerRow {
  long T = 0;
  double tau = 0.0;
  int z_id = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

struct BoundLedger {
  std::vector<LedgerRow> rows;
  double min_gap = 0.0;
  long worst_T = -1;
  int worst_z = -1;
  double tolerance = 1e-9;
  bool passed = true;

  void write_csv(const std::string& path) const;
};

/// Checks f(theta_T) - f(z) <= (D(z, theta0) - D(z, theta_T)) / tau_T for every
/// recorded T > 0 and every reference point. The Euclidean geometry gives the
/// GD / projected-GD / prox-GD form. Violations are report outcomes.
BoundLedger verify_trace(const IterateTrace& trace, const Objective& f, const BregmanGeometry& geometry,
                         const std::vector<Vec>& reference_points, double tolerance = 1e-9);
/// Single-threaded reference for verify_trace; identical output.
BoundLedger verify_trace_serial(const IterateTrace& trace, const Objective& f, const BregmanGeometry& geometry,
                                const std::vector<Vec>& reference_points, double tolerance = 1e-9);

struct EnvelopeTriple {
  double lambda = 0.0;  ///< 1 / tau_T
  double lower = 0.0;   ///< min_z f(z) + (lambda/4) ||theta0 - z||^2
  double mid = 0.0;     ///< f(theta_T) + (lambda/4) ||theta0 - theta_T||^2
  double upper = 0.0;   ///< min_z f(z) + lambda ||theta0 - z||^2
  bool holds(double tolerance = 1e-7) const { return lower <= mid + tolerance && mid <= upper + tolerance; }
};

/// Solves min_z f(z) + lambda ||center - z||^2 and returns the minimizer.
using RidgeSolver = std::function<Vec(double lambda, const Vec& center)>;

EnvelopeTriple envelope_gd(const Objective& f, const IterateTrace& trace, std::size_t record,
                           const RidgeSolver& solver);

enum class EgdLambdaConvention {
  inverse_time,  ///< lambda_T = 1 / tau_T (default; what the proof supports)
  eta_times_T    ///< lambda_T = tau_T, the convention printed alongside the EGD corollary
};

struct EgdEnvelope {
  double lambda = 0.0;
  double mid = 0.0;                ///< f(theta_T) + (lambda/4) ||pi - theta_T||_1^2
  double upper_dplus1 = 0.0;       ///< min over checked z of f(z) + lambda (d+1)/2 ||pi - z||_1^2
  double upper_reverse_pinsker = 0.0;  ///< ... f(z) + lambda (||pi-z||_1^2 / 2 + c_d ||pi-z||_1)
  double min_gap_dplus1 = 0.0;     ///< min over checked z of rhs - mid
  double min_gap_reverse_pinsker = 0.0;
  std::size_t points_checked = 0;
  double upper() const { return std::min(upper_dplus1, upper_reverse_pinsker); }
  bool holds(double tolerance = 1e-7) const {
    return min_gap_dplus1 >= -tolerance && min_gap_reverse_pinsker >= -tolerance;
  }
};

/// Returns argmin_z f(z) + lambda KL(z, pi) on the simplex.
using KlSolver = std::function<Vec(double lambda)>;

/// Checks the EGD envelope inequality (both penalty forms) at record T of an
/// EGD trace started at pi. Reference points: pi, theta_T, KL-regularized
/// solutions on a lambda grid around lambda_T, extra_points, and a local
/// descent from the best of these on each penalty form.
EgdEnvelope envelope_egd(const Objective& f, const IterateTrace& trace, std::size_t record, const KlSolver& solver,
                         EgdLambdaConvention convention = EgdLambdaConvention::inverse_time,
                         const std::vector<Vec>& extra_points = {});

double l1_squared_penalty(const Vec& pi, const Vec& z);

/// Sharp c_d in KL(z, uniform) <= c_d ||z - uniform||_1 over the simplex:
/// d log d / (2(d-1)), attained at the vertices. Tends to log(d)/2 as d grows.
double reverse_pinsker_constant(Index d);

}  // namespace implreg
