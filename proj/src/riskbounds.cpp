#include "implreg/riskbounds.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "implreg/csv.hpp"
#include "implreg/explicit.hpp"
#include "implreg/geometry.hpp"
#include "implreg/optimizers.hpp"

namespace implreg {

std::string to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::ridge: return "ridge";
    case CertificateKind::gd: return "gd";
    case CertificateKind::kl: return "kl";
    case CertificateKind::egd: return "egd";
  }
  return "?";
}

CertificateKind parse_certificate_kind(const std::string& name) {
  if (name == "ridge") return CertificateKind::ridge;
  if (name == "gd") return CertificateKind::gd;
  if (name == "kl") return CertificateKind::kl;
  if (name == "egd") return CertificateKind::egd;
  throw std::invalid_argument("unknown certificate kind: " + name);
}

nlohmann::json RiskCertificate::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["sigma"] = sigma;
  j["delta"] = delta;
  j["b"] = b;
  j["n"] = n;
  j["d"] = d;
  if (spectral) j["spectral"] = {{"trace", spectral->trace}, {"frobenius", spectral->frobenius}, {"operator", spectral->op}};
  j["column_factor"] = column_factor;
  j["noise_term"] = noise_term;
  j["lambda_star"] = lambda_star;
  j["eta"] = eta ? nlohmann::json(*eta) : nlohmann::json(nullptr);
  j["stopping_time"] = stopping_time ? nlohmann::json(*stopping_time) : nlohmann::json(nullptr);
  j["bound_value"] = bound_value;
  j["discretization_extra"] = discretization_extra;
  j["confidence"] = confidence;
  return j;
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
}

double log_term(long d, double delta) { return std::log(2.0 * static_cast<double>(d)) + delta; }

}  // namespace

double spectral_noise_term(const SpectralTerms& s, double sigma, long n, double delta) {
  require_positive(sigma, "sigma");
  if (delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
  return sigma * sigma / static_cast<double>(n) *
         (s.trace + 2.0 * s.frobenius * std::sqrt(delta) + 2.0 * s.op * delta);
}

double ridge_lambda_star(const SpectralTerms& s, double sigma, long n, double delta, double b) {
  require_positive(b, "b");
  return std::sqrt(spectral_noise_term(s, sigma, n, delta)) / (2.0 * b);
}

double gd_lambda_star(const SpectralTerms& s, double sigma, long n, double delta, double b) {
  return 2.0 * ridge_lambda_star(s, sigma, n, delta, b);
}

double ridge_bound_value(double noise_term, double b) { return 2.0 * b * std::sqrt(noise_term); }
double gd_bound_value(double noise_term, double b) { return b * std::sqrt(noise_term); }

double kl_lambda_star(double sigma, long n, long d, double delta, double b, double cf) {
  require_positive(sigma, "sigma");
  require_positive(b, "b");
  return cf * sigma * std::sqrt(log_term(d, delta) / (static_cast<double>(n) * b));
}

double egd_lambda_star(double sigma, long n, long d, double delta, double b, double cf) {
  return kl_lambda_star(sigma, n, d, delta, b, cf);
}

double kl_bound_value(double sigma, long n, long d, double delta, double b, double cf) {
  return 4.0 * cf * sigma * std::sqrt(b * log_term(d, delta) / static_cast<double>(n));
}

double egd_bound_value(double sigma, long n, long d, double delta, double b, double cf) {
  return 2.0 * cf * sigma * std::sqrt(b * log_term(d, delta) / static_cast<double>(n));
}

double family_sigma(const GlmFamily& family, long n, const std::optional<Vec>& mean_truth,
                    const std::optional<Vec>& noise_sd) {
  switch (family.kind) {
    case Family::gaussian:
      if (!noise_sd || noise_sd->size() == 0) throw std::invalid_argument("family_sigma: Gaussian needs noise_sd");
      return noise_sd->maxCoeff();
    case Family::bernoulli:
      return 0.5;
    case Family::poisson: {
      if (n < 3) throw std::invalid_argument("family_sigma: Poisson requires n >= 3");
      if (!mean_truth) throw std::invalid_argument("family_sigma: Poisson requires mean_truth");
      const double m = mean_truth->cwiseAbs().maxCoeff();
      return (2.0 * m + 2.0 / 3.0) * std::log(static_cast<double>(n)) + m / 2.0;
    }
  }
  return 0.0;
}

double poisson_truncation_level(double mean_max, long n) {
  return 4.0 * (mean_max + 1.0 / 3.0) * std::log(static_cast<double>(n));
}

StoppingTime stopping_time(double lambda_star, double eta) {
  require_positive(lambda_star, "lambda_star");
  require_positive(eta, "eta");
  const double x = 1.0 / (eta * lambda_star);
  const double r = std::round(x);
  StoppingTime st;
  st.integral = std::abs(x - r) <= 1e-12 * std::max(1.0, x) && r >= 1.0;
  st.T = st.integral ? static_cast<long>(r) : static_cast<long>(std::ceil(x));
  return st;
}

double gd_discretization_extra(double eta, double noise_term) { return eta * noise_term / 2.0; }

double egd_discretization_extra(double eta, double sigma, long n, long d, double delta, double b) {
  const double nn = static_cast<double>(n);
  return eta * eta * std::pow(sigma, 3) * std::pow(log_term(d, delta), 1.5) / (std::pow(nn, 1.5) * std::sqrt(b));
}

RiskCertificate ridge_certificate(const Design& design, double sigma, double delta, double b) {
  RiskCertificate c;
  c.kind = CertificateKind::ridge;
  c.sigma = sigma;
  c.delta = delta;
  c.b = b;
  c.n = design.n();
  c.d = design.d();
  c.spectral = spectral_terms(design);
  c.noise_term = spectral_noise_term(*c.spectral, sigma, c.n, delta);
  c.lambda_star = ridge_lambda_star(*c.spectral, sigma, c.n, delta, b);
  c.bound_value = ridge_bound_value(c.noise_term, b);
  c.confidence = 1.0 - std::exp(-delta);
  return c;
}

RiskCertificate gd_certificate(const Design& design, double sigma, double delta, double b, double eta) {
  RiskCertificate c = ridge_certificate(design, sigma, delta, b);
  c.kind = CertificateKind::gd;
  c.lambda_star = gd_lambda_star(*c.spectral, sigma, c.n, delta, b);
  c.bound_value = gd_bound_value(c.noise_term, b);
  c.eta = eta;
  const StoppingTime st = stopping_time(c.lambda_star, eta);
  c.stopping_time = st.T;
  c.discretization_extra = st.integral ? 0.0 : gd_discretization_extra(eta, c.noise_term);
  return c;
}

RiskCertificate kl_certificate(const Design& design, double sigma, double delta, double b) {
  RiskCertificate c;
  c.kind = CertificateKind::kl;
  c.sigma = sigma;
  c.delta = delta;
  c.b = b;
  c.n = design.n();
  c.d = design.d();
  c.column_factor = std::max(1.0, column_norm_factor(design));
  c.noise_term = log_term(c.d, delta);
  c.lambda_star = kl_lambda_star(sigma, c.n, c.d, delta, b, c.column_factor);
  c.bound_value = kl_bound_value(sigma, c.n, c.d, delta, b, c.column_factor);
  c.confidence = 1.0 - std::exp(-delta);
  return c;
}

RiskCertificate egd_certificate(const Design& design, double sigma, double delta, double b, double eta) {
  RiskCertificate c = kl_certificate(design, sigma, delta, b);
  c.kind = CertificateKind::egd;
  c.lambda_star = egd_lambda_star(sigma, c.n, c.d, delta, b, c.column_factor);
  c.bound_value = egd_bound_value(sigma, c.n, c.d, delta, b, c.column_factor);
  c.eta = eta;
  const StoppingTime st = stopping_time(c.lambda_star, eta);
  c.stopping_time = st.T;
  c.discretization_extra = st.integral ? 0.0 : egd_discretization_extra(eta, sigma, c.n, c.d, delta, b);
  return c;
}

double deterministic_bound(CertificateKind kind, double lambda, const Vec& w, double p) {
  require_positive(lambda, "lambda");
  switch (kind) {
    case CertificateKind::ridge: return w.squaredNorm() / (2.0 * lambda) + 2.0 * lambda * p;
    case CertificateKind::gd: return w.squaredNorm() / (2.0 * lambda) + lambda / 2.0 * p;
    case CertificateKind::kl: {
      const double m = w.lpNorm<Eigen::Infinity>();
      return m * m / lambda + 2.0 * lambda * p;
    }
    case CertificateKind::egd: {
      const double m = w.lpNorm<Eigen::Infinity>();
      return m * m / (2.0 * lambda) + lambda * p;
    }
  }
  return 0.0;
}

double sup_norm_noise_bound(const Design& design, double sigma, double delta) {
  const double cf = std::max(1.0, column_norm_factor(design));
  return sigma * cf * std::sqrt(2.0 * log_term(design.d(), delta) / static_cast<double>(design.n()));
}

double aux_lemma_gap(double a, double b, double c) {
  require_positive(a, "a");
  require_positive(b, "b");
  if (c < 0.0) throw std::invalid_argument("c must be nonnegative");
  const double xs = std::sqrt(a / b);
  const double y = 1.0 / (1.0 / xs + c);
  auto g = [&](double x) { return a / x + b * x; };
  return g(y) - g(xs);
}

Vec certificate_estimator(const GlmProblem& problem, const RiskCertificate& cert) {
  const Index d = problem.d();
  const Vec pi = Vec::Constant(d, 1.0 / static_cast<double>(d));
  RunOptions ro;
  ro.record = RecordPolicy::every_kth(std::numeric_limits<long>::max());
  switch (cert.kind) {
    case CertificateKind::ridge:
      return ridge_glm_solve(problem, cert.lambda_star).theta;
    case CertificateKind::kl:
      return kl_glm_solve(problem, cert.lambda_star, pi).theta;
    case CertificateKind::gd: {
      const GlmObjective f(problem);
      return gd_run(f, Vec::Zero(d), StepSchedule::constant(*cert.eta, *cert.stopping_time), ro).final_iterate();
    }
    case CertificateKind::egd: {
      const GlmObjective f(problem);
      return egd_run(f, pi, StepSchedule::constant(*cert.eta, *cert.stopping_time), ro).final_iterate();
    }
  }
  throw std::invalid_argument("unknown certificate kind");
}

double feasible_risk_infimum(const GlmProblem& problem, CertificateKind kind, double b) {
  require_positive(b, "b");
  const GlmProblem rp = problem.risk_problem();
  const GlmObjective f(rp);
  const Index d = problem.d();
  const Vec pi = Vec::Constant(d, 1.0 / static_cast<double>(d));
  const bool l2 = kind == CertificateKind::ridge || kind == CertificateKind::gd;

  RidgeOptions ro;
  ro.tolerance = 1e-11;
  KlOptions ko;
  ko.tolerance = 1e-11;
  ko.max_iter = 2000;
  // Returns (constraint value, risk) at penalty weight lambda.
  auto solve = [&](double lambda) -> std::pair<double, double> {
    if (l2) {
      const auto s = ridge_solve(f, lambda, ro);
      ro.warm_start = s.theta;
      return {s.theta.norm(), s.loss};
    }
    const auto s = kl_solve(f, lambda, pi, ko);
    ko.warm_start_log = s.log_theta;
    return {s.penalty, s.loss};
  };
  const double limit = b;
  double lo = -12.0, hi = 8.0;  // log10 lambda
  auto [c_lo, r_lo] = solve(std::pow(10.0, lo));
  if (c_lo <= limit) return r_lo;
  auto [c_hi, r_hi] = solve(std::pow(10.0, hi));
  if (c_hi > limit) throw ConvergenceError("feasible_risk_infimum: constraint not attained at lambda = 1e8");
  double best = r_hi;
  for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto [c, r] = solve(std::pow(10.0, mid));
    if (c <= limit) {
      hi = mid;
      best = r;
    } else {
      lo = mid;
    }
  }
  return best;
}

nlohmann::json CoverageReport::to_json() const {
  return {{"claim", claim},         {"replicates", replicates}, {"violations", violations},
          {"rate", rate},           {"target", target},         {"threshold", threshold},
          {"passed", passed},       {"seconds", seconds}};
}

namespace {

CoverageReport finish(const std::string& claim, double target, long replicates, long violations, double seconds) {
  CoverageReport r;
  r.claim = claim;
  r.replicates = replicates;
  r.violations = violations;
  r.rate = replicates > 0 ? static_cast<double>(violations) / static_cast<double>(replicates) : 0.0;
  r.target = target;
  const double t = std::min(target, 1.0);
  r.threshold = target + 3.0 * std::sqrt(t * (1.0 - t) / static_cast<double>(std::max(1L, replicates)));
  r.passed = r.rate <= r.threshold;
  r.seconds = seconds;
  return r;
}

/// A replicate whose estimator throws counts as a violation.
bool run_replicate(const ReplicateCheck& check, std::uint64_t seed, long r) {
  CounterRng rng(seed, static_cast<std::uint64_t>(r));
  try {
    return check(r, rng);
  } catch (const std::exception&) {
    return true;
  }
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CoverageReport coverage_experiment(const std::string& claim, double target, const McOptions& options,
                                   const ReplicateCheck& check) {
  const auto t0 = std::chrono::steady_clock::now();
  long violations = 0;
  const long reps = options.replicates;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : violations)
  for (long r = 0; r < reps; ++r) {
    if (run_replicate(check, options.seed, r)) ++violations;
  }
  return finish(claim, target, reps, violations, elapsed(t0));
}

CoverageReport coverage_experiment_serial(const std::string& claim, double target, const McOptions& options,
                                          const ReplicateCheck& check) {
  const auto t0 = std::chrono::steady_clock::now();
  long violations = 0;
  for (long r = 0; r < options.replicates; ++r) {
    if (run_replicate(check, options.seed, r)) ++violations;
  }
  return finish(claim, target, options.replicates, violations, elapsed(t0));
}

CoverageReport monte_carlo_validate(const GlmProblem& problem, const ResponseSampler& sampler,
                                    const RiskCertificate& cert, const McOptions& options, bool parallel) {
  const double inf_risk = feasible_risk_infimum(problem, cert.kind, cert.b);
  const double bound = cert.total_bound();
  double target = std::exp(-cert.delta);
  if (problem.family().kind == Family::poisson) target += 1.0 / static_cast<double>(problem.n());
  const ReplicateCheck check = [&](long, CounterRng& rng) {
    const GlmProblem pr = problem.with_response(sampler(rng));
    return prediction_risk(problem, certificate_estimator(pr, cert)) - inf_risk > bound;
  };
  const std::string claim = to_string(cert.kind) + " risk bound";
  return parallel ? coverage_experiment(claim, target, options, check)
                  : coverage_experiment_serial(claim, target, options, check);
}

namespace {

Vec noise_projection(const GlmProblem& problem, const Vec& y) {
  return problem.x().transpose() * (y - *problem.mean_truth()) / static_cast<double>(problem.n());
}

}  // namespace

CoverageReport monte_carlo_quadratic_noise(const GlmProblem& problem, const ResponseSampler& sampler, double sigma,
                                           double delta, const McOptions& options) {
  if (!problem.mean_truth()) throw std::invalid_argument("mean_truth required");
  const double c = spectral_noise_term(spectral_terms(problem.design()), sigma, problem.n(), delta);
  return coverage_experiment("quadratic noise term", std::exp(-delta), options, [&](long, CounterRng& rng) {
    return noise_projection(problem, sampler(rng)).squaredNorm() > c;
  });
}

CoverageReport monte_carlo_sup_norm(const GlmProblem& problem, const ResponseSampler& sampler, double sigma,
                                    double delta, const McOptions& options) {
  if (!problem.mean_truth()) throw std::invalid_argument("mean_truth required");
  const double bound = sup_norm_noise_bound(problem.design(), sigma, delta);
  return coverage_experiment("sup-norm noise term", std::exp(-delta), options, [&](long, CounterRng& rng) {
    return noise_projection(problem, sampler(rng)).lpNorm<Eigen::Infinity>() > bound;
  });
}

CoverageReport monte_carlo_poisson_truncation(const GlmProblem& problem, const ResponseSampler& sampler,
                                              const McOptions& options) {
  if (!problem.mean_truth()) throw std::invalid_argument("mean_truth required");
  const Vec& mu = *problem.mean_truth();
  const double level = poisson_truncation_level(mu.cwiseAbs().maxCoeff(), problem.n());
  return coverage_experiment("poisson truncation event", 1.0 / static_cast<double>(problem.n()), options,
                             [&](long, CounterRng& rng) { return (sampler(rng) - mu).maxCoeff() >= level; });
}

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records) {
  auto out = csv::open_output(path);
  for (const auto& r : records) out << r.dump() << "\n";
}

}  // namespace implreg
