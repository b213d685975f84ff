#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "implreg/glm.hpp"
#include "implreg/rng.hpp"

namespace implreg {

enum class CertificateKind { ridge, gd, kl, egd };
std::string to_string(CertificateKind kind);
CertificateKind parse_certificate_kind(const std::string& name);

struct RiskCertificate {
  CertificateKind kind = CertificateKind::ridge;
  double sigma = 0.0;
  double delta = 0.0;
  double b = 0.0;  ///< l2 radius (ridge, gd) or KL radius (kl, egd)
  long n = 0;
  long d = 0;
  std::optional<SpectralTerms> spectral;  ///< ridge, gd
  double column_factor = 1.0;             ///< max(1, max_j ||X_j|| / sqrt n); kl, egd
  double noise_term = 0.0;                ///< C_sG (ridge, gd) or log(2d) + delta (kl, egd)
  double lambda_star = 0.0;
  std::optional<double> eta;              ///< gd, egd
  std::optional<long> stopping_time;      ///< gd, egd
  double bound_value = 0.0;
  double discretization_extra = 0.0;
  double confidence = 0.0;                ///< 1 - exp(-delta)

  double total_bound() const { return bound_value + discretization_extra; }
  nlohmann::json to_json() const;
};

/// (sigma^2 / n) (tr + 2 ||.||_F sqrt(delta) + 2 ||.||_op delta).
double spectral_noise_term(const SpectralTerms& spectral, double sigma, long n, double delta);
double ridge_lambda_star(const SpectralTerms& spectral, double sigma, long n, double delta, double b);
double gd_lambda_star(const SpectralTerms& spectral, double sigma, long n, double delta, double b);
double ridge_bound_value(double noise_term, double b);  ///< 2 b sqrt(C)
double gd_bound_value(double noise_term, double b);     ///< b sqrt(C)

/// sigma sqrt((log 2d + delta) / (n b)), times column_factor.
double kl_lambda_star(double sigma, long n, long d, double delta, double b, double column_factor = 1.0);
double egd_lambda_star(double sigma, long n, long d, double delta, double b, double column_factor = 1.0);
double kl_bound_value(double sigma, long n, long d, double delta, double b, double column_factor = 1.0);
double egd_bound_value(double sigma, long n, long d, double delta, double b, double column_factor = 1.0);

/// Gaussian: max of noise_sd (required). Bernoulli: 1/2.
/// Poisson: (2 m + 2/3) log n + m / 2 with m = ||mean||_inf, n >= 3.
double family_sigma(const GlmFamily& family, long n, const std::optional<Vec>& mean_truth = std::nullopt,
                    const std::optional<Vec>& noise_sd = std::nullopt);
/// D = 4 (m + 1/3) log n.
double poisson_truncation_level(double mean_max, long n);

struct StoppingTime {
  long T = 0;
  bool integral = false;  ///< 1 / (eta lambda*) integral within 1e-12
};
StoppingTime stopping_time(double lambda_star, double eta);
double gd_discretization_extra(double eta, double noise_term);
double egd_discretization_extra(double eta, double sigma, long n, long d, double delta, double b);

RiskCertificate ridge_certificate(const Design& design, double sigma, double delta, double b);
RiskCertificate gd_certificate(const Design& design, double sigma, double delta, double b, double eta);
RiskCertificate kl_certificate(const Design& design, double sigma, double delta, double b);
RiskCertificate egd_certificate(const Design& design, double sigma, double delta, double b, double eta);

/// Deterministic right-hand side given w = X^T eps / n and the reference
/// penalty p (||theta||^2 for ridge/gd, KL(theta, z) for kl/egd).
double deterministic_bound(CertificateKind kind, double lambda, const Vec& w, double reference_penalty);

/// sigma * max(1, C_nd) * sqrt(2 (log 2d + delta) / n).
double sup_norm_noise_bound(const Design& design, double sigma, double delta);

/// g(x) = a/x + b x at y with 1/y = 1/x* + c, minus g(x*); the lemma bounds it by a c.
double aux_lemma_gap(double a, double b, double c);

/// Estimator computed on one response draw.
Vec certificate_estimator(const GlmProblem& problem, const RiskCertificate& cert);

/// inf of the prediction risk over {||theta||_2 <= b} (ridge, gd) or
/// {KL(theta, uniform) <= b} (kl, egd), via the Lagrangian: bisection on the
/// penalty weight of the regularized risk minimizer until the constraint is tight.
double feasible_risk_infimum(const GlmProblem& problem, CertificateKind kind, double b);

struct CoverageReport {
  std::string claim;
  long replicates = 0;
  long violations = 0;
  double rate = 0.0;
  double target = 0.0;
  double threshold = 0.0;  ///< target + 3 binomial standard errors
  bool passed = false;
  double seconds = 0.0;
  nlohmann::json to_json() const;
};

struct McOptions {
  long replicates = 2000;
  std::uint64_t seed = 1;
};

/// Draws a fresh response vector around the problem's mean.
using ResponseSampler = std::function<Vec(CounterRng&)>;
/// Returns true when replicate r violates the claim.
using ReplicateCheck = std::function<bool(long replicate, CounterRng& rng)>;

CoverageReport coverage_experiment(const std::string& claim, double target, const McOptions& options,
                                   const ReplicateCheck& check);
CoverageReport coverage_experiment_serial(const std::string& claim, double target, const McOptions& options,
                                          const ReplicateCheck& check);

/// Frequency of Risk(estimator) - inf_feasible Risk > certificate bound.
/// Target exp(-delta), plus 1/n for Poisson.
CoverageReport monte_carlo_validate(const GlmProblem& problem, const ResponseSampler& sampler,
                                    const RiskCertificate& cert, const McOptions& options, bool parallel = true);
/// Frequency of ||X^T eps / n||^2 > C_sG.
CoverageReport monte_carlo_quadratic_noise(const GlmProblem& problem, const ResponseSampler& sampler, double sigma,
                                           double delta, const McOptions& options);
/// Frequency of ||X^T eps / n||_inf > sup_norm_noise_bound.
CoverageReport monte_carlo_sup_norm(const GlmProblem& problem, const ResponseSampler& sampler, double sigma,
                                    double delta, const McOptions& options);
/// Frequency of max_i eps_i >= D; target 1/n.
CoverageReport monte_carlo_poisson_truncation(const GlmProblem& problem, const ResponseSampler& sampler,
                                              const McOptions& options);

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records);

}  // namespace implreg
