#pragma once

#include <optional>
#include <string>
#include <vector>

#include "implreg/riskbounds.hpp"
#include "implreg/types.hpp"

namespace implreg {

/// Finite set of base models with empirical (and, in simulation, population) risks.
class ModelCollection {
 public:
  /// prior defaults to uniform; a supplied prior must be positive and is normalized.
  explicit ModelCollection(Vec empirical_risks, std::optional<Vec> population_risks = std::nullopt,
                           std::optional<Vec> prior = std::nullopt, std::vector<std::string> ids = {});

  Index size() const { return empirical_.size(); }
  const Vec& empirical_risks() const { return empirical_; }
  const std::optional<Vec>& population_risks() const { return population_; }
  const Vec& prior() const { return prior_; }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  Vec empirical_;
  std::optional<Vec> population_;
  Vec prior_;
  std::vector<std::string> ids_;
};

/// Columns: model_id, empirical_risk, optional population_risk, optional prior_weight.
ModelCollection read_collection_csv(const std::string& path);

/// prior * exp(-risk / lambda), normalized with max-subtraction.
Vec gibbs_posterior(const ModelCollection& collection, double lambda);

struct EquivalenceResult {
  double lambda = 0.0;  ///< 1 / (eta T)
  Vec egd;
  Vec gibbs;
  double max_deviation = 0.0;
};
/// Runs EGD on <R_hat, theta> from the prior and compares with the Gibbs posterior at 1/(eta T).
EquivalenceResult egd_equivalence_check(const ModelCollection& collection, double eta, long T);

/// E_weights[R] over population risks.
double expected_risk(const ModelCollection& collection, const Vec& weights);

enum class AggregateKind { gibbs, egd };

/// gibbs: (1/lambda) ||R_hat - R||_inf^2 + 2 lambda KL(reference, prior)
/// egd:   (1/(2 lambda)) ||R_hat - R||_inf^2 + lambda KL(reference, prior), lambda = 1/(eta T)
double risk_gap_bound(const ModelCollection& collection, AggregateKind kind, double lambda, const Vec& reference);

struct HoeffdingChoice {
  double lambda = 0.0;
  double bound = 0.0;
};
/// lambda = (C/2) sqrt((log 2|B| + delta)/(n b)), bound = 2 C sqrt(b (log 2|B| + delta)/n).
HoeffdingChoice hoeffding_lambda(double C, long n, long cardinality, double delta, double b);

/// inf <r, theta> over {theta in simplex : KL(theta, z) <= b}.
double kl_ball_linear_infimum(const Vec& r, const Vec& z, double b);

/// Base-model losses are Bernoulli(population_risks); R_hat averages n draws.
/// Violation: E_gibbs[R] - inf_{KL <= b} E[R] > Hoeffding bound.
CoverageReport monte_carlo_hoeffding(const Vec& population_risks, long n, double delta, double b,
                                     const McOptions& options);

}  // namespace implreg
