#pragma once

#include <memory>
#include <optional>
#include <string>

#include "implreg/types.hpp"

namespace implreg {

/// Fixed design matrix with cached column and row norms.
class Design {
 public:
  explicit Design(Mat x);

  const Mat& x() const { return x_; }
  Index n() const { return x_.rows(); }
  Index d() const { return x_.cols(); }
  const Vec& column_norms() const { return column_norms_; }
  const Vec& row_norms() const { return row_norms_; }
  const Vec& row_max_abs() const { return row_max_abs_; }

 private:
  Mat x_;
  Vec column_norms_;
  Vec row_norms_;
  Vec row_max_abs_;
};

enum class Family { gaussian, bernoulli, poisson };

/// Canonical one-parameter exponential family, described by its cumulant A.
struct GlmFamily {
  Family kind = Family::gaussian;

  double cumulant(double xi) const;   ///< A
  double mean(double xi) const;       ///< A'
  double variance(double xi) const;   ///< A''
  std::string name() const;
  static GlmFamily parse(const std::string& name);
};

/// Linear predictors above this raise SaturationError for the Poisson family.
inline constexpr double kPoissonSaturation = 700.0;
/// Poisson curvature weights are evaluated at min(xi, kPoissonClamp).
inline constexpr double kPoissonClamp = 30.0;

class GlmProblem {
 public:
  GlmProblem(std::shared_ptr<const Design> design, Vec response, GlmFamily family,
             std::optional<Vec> mean_truth = std::nullopt);
  GlmProblem(Mat x, Vec response, GlmFamily family, std::optional<Vec> mean_truth = std::nullopt);

  const Design& design() const { return *design_; }
  std::shared_ptr<const Design> design_ptr() const { return design_; }
  const Mat& x() const { return design_->x(); }
  const Vec& y() const { return y_; }
  const GlmFamily& family() const { return family_; }
  const std::optional<Vec>& mean_truth() const { return mean_; }
  Index n() const { return design_->n(); }
  Index d() const { return design_->d(); }

  /// Same design and family, new response (mean_truth kept).
  GlmProblem with_response(Vec response) const;
  /// The problem whose loss equals the prediction risk: response replaced by mean_truth.
  GlmProblem risk_problem() const;

 private:
  std::shared_ptr<const Design> design_;
  Vec y_;
  GlmFamily family_;
  std::optional<Vec> mean_;
};

struct SpectralTerms {
  double trace = 0.0;
  double frobenius = 0.0;
  double op = 0.0;
};

enum class SmoothnessGeometry { euclidean, l1_simplex };

/// X theta with the Poisson overflow guard applied.
Vec linear_predictor(const GlmProblem& problem, const Vec& theta);

double loss(const GlmProblem& problem, const Vec& theta);
Vec loss_gradient(const GlmProblem& problem, const Vec& theta);
/// Returns the loss and writes the gradient; one pass over X theta.
double loss_and_gradient(const GlmProblem& problem, const Vec& theta, Vec& grad);
/// (1/n) X^T diag(A''(X theta)) X; Poisson weights clamped at exp(kPoissonClamp).
Mat loss_hessian(const GlmProblem& problem, const Vec& theta, bool* clamped = nullptr);

double prediction_risk(const GlmProblem& problem, const Vec& theta);

double smoothness_constant(const GlmProblem& problem, SmoothnessGeometry geometry,
                           std::optional<double> radius = std::nullopt);

SpectralTerms spectral_terms(const Design& design);

/// Largest eigenvalue of X^T X / n by power iteration (fixed start, 10 000 cap).
double covariance_operator_norm(const Mat& x);

/// max_j ||X_j||_2 / sqrt(n).
double column_norm_factor(const Design& design);

struct LoadedProblem {
  GlmProblem problem;
  std::optional<Vec> theta_true;
};

/// Reads a CSV with an optional header. The response column is selected by
/// name (requires a header) or by zero-based index given as a decimal string.
/// An optional mean column is loaded as mean_truth. Lines starting with '#'
/// are comments; "# theta_true: a b c" supplies theta_true.
LoadedProblem read_problem_csv(const std::string& path, const std::string& response_column,
                               GlmFamily family,
                               const std::optional<std::string>& mean_column = std::nullopt);

void write_problem_csv(const std::string& path, const GlmProblem& problem,
                       const std::optional<Vec>& theta_true);

}  // namespace implreg
