#include "implreg/basicineq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "implreg/csv.hpp"
#include "implreg/rng.hpp"

namespace implreg {

double gd_bound(const Vec& theta0, const Vec& thetaT, const Vec& z, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("gd_bound: tau must be positive");
  require_same_size(theta0.size(), z.size(), "gd_bound");
  require_same_size(thetaT.size(), z.size(), "gd_bound");
  return ((theta0 - z).squaredNorm() - (thetaT - z).squaredNorm()) / (2.0 * tau);
}

double md_bound(const BregmanGeometry& geometry, const Vec& theta0, const Vec& thetaT, const Vec& z, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("md_bound: tau must be positive");
  return (geometry.divergence(z, theta0) - geometry.divergence(z, thetaT)) / tau;
}

double divergence(const BregmanGeometry& geometry, const Vec& u, const Vec& v) {
  return geometry.divergence(u, v);
}

void BoundLedger::write_csv(const std::string& path) const {
  auto out = csv::open_output(path);
  out << "T,tau,z_id,lhs,rhs,gap\n";
  for (const auto& r : rows) {
    out << r.T << ',' << csv::format_double(r.tau) << ',' << r.z_id << ',' << csv::format_double(r.lhs) << ','
        << csv::format_double(r.rhs) << ',' << csv::format_double(r.gap) << "\n";
  }
}

namespace {

LedgerRow ledger_row(const IterateTrace& trace, const BregmanGeometry& geometry, const std::vector<Vec>& zs,
                     const std::vector<double>& fz, const std::vector<double>& d0, std::size_t k, std::size_t zi) {
  LedgerRow r;
  r.T = trace.t[k];
  r.tau = trace.tau[k];
  r.z_id = static_cast<int>(zi);
  r.lhs = trace.objective[k] - fz[zi];
  r.rhs = (d0[zi] - geometry.divergence(zs[zi], trace.iterates[k])) / trace.tau[k];
  r.gap = r.rhs - r.lhs;
  return r;
}

void summarize(BoundLedger& ledger) {
  ledger.min_gap = std::numeric_limits<double>::infinity();
  for (const auto& r : ledger.rows) {
    if (r.gap < ledger.min_gap) {
      ledger.min_gap = r.gap;
      ledger.worst_T = r.T;
      ledger.worst_z = r.z_id;
    }
  }
  ledger.passed = ledger.rows.empty() || ledger.min_gap >= -ledger.tolerance;
}

std::vector<std::size_t> positive_records(const IterateTrace& trace) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k < trace.size(); ++k)
    if (trace.tau[k] > 0.0) ks.push_back(k);
  return ks;
}

}  // namespace

BoundLedger verify_trace_serial(const IterateTrace& trace, const Objective& f, const BregmanGeometry& geometry,
                                const std::vector<Vec>& zs, double tolerance) {
  BoundLedger ledger;
  ledger.tolerance = tolerance;
  std::vector<double> fz(zs.size()), d0(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    fz[i] = f.value(zs[i]);
    d0[i] = geometry.divergence(zs[i], trace.initial());
  }
  for (std::size_t k : positive_records(trace))
    for (std::size_t i = 0; i < zs.size(); ++i) ledger.rows.push_back(ledger_row(trace, geometry, zs, fz, d0, k, i));
  summarize(ledger);
  return ledger;
}

BoundLedger verify_trace(const IterateTrace& trace, const Objective& f, const BregmanGeometry& geometry,
                         const std::vector<Vec>& zs, double tolerance) {
  BoundLedger ledger;
  ledger.tolerance = tolerance;
  const long nz = static_cast<long>(zs.size());
  std::vector<double> fz(zs.size()), d0(zs.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < nz; ++i) {
    fz[i] = f.value(zs[i]);
    d0[i] = geometry.divergence(zs[i], trace.initial());
  }
  const auto ks = positive_records(trace);
  const long total = static_cast<long>(ks.size()) * nz;
  ledger.rows.resize(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < total; ++idx) {
    const std::size_t k = ks[static_cast<std::size_t>(idx / nz)];
    const std::size_t zi = static_cast<std::size_t>(idx % nz);
    ledger.rows[static_cast<std::size_t>(idx)] = ledger_row(trace, geometry, zs, fz, d0, k, zi);
  }
  summarize(ledger);
  return ledger;
}

EnvelopeTriple envelope_gd(const Objective& f, const IterateTrace& trace, std::size_t record,
                           const RidgeSolver& solver) {
  if (record >= trace.size() || !(trace.tau[record] > 0.0))
    throw std::invalid_argument("envelope_gd: record must have tau > 0");
  const Vec& theta0 = trace.initial();
  const Vec& thetaT = trace.iterates[record];
  EnvelopeTriple e;
  e.lambda = 1.0 / trace.tau[record];
  const double q = e.lambda / 4.0;
  const Vec z_low = solver(q, theta0);
  const Vec z_up = solver(e.lambda, theta0);
  e.lower = f.value(z_low) + q * (theta0 - z_low).squaredNorm();
  e.mid = trace.objective[record] + q * (theta0 - thetaT).squaredNorm();
  e.upper = f.value(z_up) + e.lambda * (theta0 - z_up).squaredNorm();
  return e;
}

double l1_squared_penalty(const Vec& pi, const Vec& z) {
  const double a = (pi - z).lpNorm<1>();
  return a * a;
}

namespace {

struct EgdForms {
  double dplus1;
  double reverse_pinsker;
};

EgdForms egd_penalties(const Vec& pi, const Vec& z) {
  const double d = static_cast<double>(pi.size());
  const double a = (pi - z).lpNorm<1>();
  return {0.5 * (d + 1.0) * a * a, 0.5 * a * a + reverse_pinsker_constant(pi.size()) * a};
}

}  // namespace

double reverse_pinsker_constant(Index d) {
  if (d < 2) return 0.0;
  const double dd = static_cast<double>(d);
  return dd * std::log(dd) / (2.0 * (dd - 1.0));
}

EgdEnvelope envelope_egd(const Objective& f, const IterateTrace& trace, std::size_t record, const KlSolver& solver,
                         EgdLambdaConvention convention, const std::vector<Vec>& extra_points) {
  if (record >= trace.size() || !(trace.tau[record] > 0.0))
    throw std::invalid_argument("envelope_egd: record must have tau > 0");
  const Vec& pi = trace.initial();
  const Vec& thetaT = trace.iterates[record];
  const double tau = trace.tau[record];
  EgdEnvelope e;
  e.lambda = convention == EgdLambdaConvention::inverse_time ? 1.0 / tau : tau;
  e.mid = trace.objective[record] + 0.25 * e.lambda * l1_squared_penalty(pi, thetaT);
  e.upper_dplus1 = e.upper_reverse_pinsker = std::numeric_limits<double>::infinity();

  auto check = [&](const Vec& z) -> EgdForms {
    const double fz = f.value(z);
    const EgdForms p = egd_penalties(pi, z);
    const EgdForms rhs{fz + e.lambda * p.dplus1, fz + e.lambda * p.reverse_pinsker};
    e.upper_dplus1 = std::min(e.upper_dplus1, rhs.dplus1);
    e.upper_reverse_pinsker = std::min(e.upper_reverse_pinsker, rhs.reverse_pinsker);
    ++e.points_checked;
    return rhs;
  };

  std::vector<Vec> candidates{pi, thetaT};
  for (double scale : {1.0 / 64, 1.0 / 16, 1.0 / 4, 1.0, 4.0, 16.0, 64.0})
    candidates.push_back(solver(e.lambda * scale));
  for (const auto& z : extra_points) candidates.push_back(z);

  Vec best_d = pi, best_r = pi;
  double val_d = std::numeric_limits<double>::infinity(), val_r = val_d;
  for (const auto& z : candidates) {
    const EgdForms r = check(z);
    if (r.dplus1 < val_d) { val_d = r.dplus1; best_d = z; }
    if (r.reverse_pinsker < val_r) { val_r = r.reverse_pinsker; best_r = z; }
  }

  // Random pairwise mass transfers, shrinking the transfer fraction on failure.
  const Index d = pi.size();
  auto refine = [&](Vec z, double val, bool dplus1_form) {
    CounterRng rng(0xe9d, dplus1_form ? 1 : 2);
    double frac = 0.5;
    int fails = 0;
    for (int it = 0; it < 3000 && frac > 1e-9 && d > 1; ++it) {
      const Index i = static_cast<Index>(rng() % static_cast<std::uint64_t>(d));
      Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(d - 1));
      if (j >= i) ++j;
      Vec trial = z;
      const double m = frac * trial(i);
      trial(i) -= m;
      trial(j) += m;
      const EgdForms r = check(trial);
      const double v = dplus1_form ? r.dplus1 : r.reverse_pinsker;
      if (v < val) {
        val = v;
        z = trial;
        fails = 0;
      } else if (++fails > 4 * d) {
        frac *= 0.5;
        fails = 0;
      }
    }
  };
  refine(best_d, val_d, true);
  refine(best_r, val_r, false);

  e.min_gap_dplus1 = e.upper_dplus1 - e.mid;
  e.min_gap_reverse_pinsker = e.upper_reverse_pinsker - e.mid;
  return e;
}

}  // namespace implreg
