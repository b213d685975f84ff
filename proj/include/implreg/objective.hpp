#pragma once

#include <functional>
#include <memory>

#include "implreg/glm.hpp"
#include "implreg/types.hpp"

namespace implreg {

/// Differentiable convex objective. Hessian is optional (second-order solvers only).
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index dim() const = 0;
  virtual double value(const Vec& theta) const = 0;
  virtual void gradient_into(const Vec& theta, Vec& grad) const = 0;
  virtual double value_and_gradient(const Vec& theta, Vec& grad) const {
    gradient_into(theta, grad);
    return value(theta);
  }
  virtual bool has_hessian() const { return false; }
  virtual Mat hessian(const Vec& theta) const;

  Vec gradient(const Vec& theta) const {
    Vec g(dim());
    gradient_into(theta, g);
    return g;
  }
};

/// GLM negative log-likelihood.
class GlmObjective final : public Objective {
 public:
  explicit GlmObjective(std::shared_ptr<const GlmProblem> problem);
  explicit GlmObjective(const GlmProblem& problem);
  Index dim() const override { return problem_->d(); }
  double value(const Vec& theta) const override { return loss(*problem_, theta); }
  void gradient_into(const Vec& theta, Vec& grad) const override;
  double value_and_gradient(const Vec& theta, Vec& grad) const override;
  bool has_hessian() const override { return true; }
  Mat hessian(const Vec& theta) const override { return loss_hessian(*problem_, theta); }
  const GlmProblem& problem() const { return *problem_; }

 private:
  std::shared_ptr<const GlmProblem> problem_;
};

/// (1/2n) ||Y - X theta||^2.
class LeastSquaresObjective final : public Objective {
 public:
  LeastSquaresObjective(Mat x, Vec y);
  Index dim() const override { return x_.cols(); }
  double value(const Vec& theta) const override;
  void gradient_into(const Vec& theta, Vec& grad) const override;
  double value_and_gradient(const Vec& theta, Vec& grad) const override;
  bool has_hessian() const override { return true; }
  Mat hessian(const Vec&) const override { return gram_; }
  const Mat& x() const { return x_; }
  const Vec& y() const { return y_; }
  /// ||X^T X / n||_op.
  double smoothness() const;

 private:
  Mat x_;
  Vec y_;
  Mat gram_;
};

/// <c, theta> + offset.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Vec c, double offset = 0.0) : c_(std::move(c)), offset_(offset) {}
  Index dim() const override { return c_.size(); }
  double value(const Vec& theta) const override { return c_.dot(theta) + offset_; }
  void gradient_into(const Vec&, Vec& grad) const override { grad = c_; }
  bool has_hessian() const override { return true; }
  Mat hessian(const Vec&) const override { return Mat::Zero(c_.size(), c_.size()); }
  const Vec& coefficients() const { return c_; }

 private:
  Vec c_;
  double offset_;
};

/// Poisson linear inverse problem: (1/n) D_BS(Y, X theta) with
/// D_BS(y, m) = sum y log(y/m) + m - y, so the optimum of a consistent system is 0.
class PlipObjective final : public Objective {
 public:
  /// Throws std::invalid_argument on a nonpositive entry of X or Y.
  PlipObjective(Mat x, Vec y);
  Index dim() const override { return x_.cols(); }
  double value(const Vec& theta) const override;
  void gradient_into(const Vec& theta, Vec& grad) const override;
  bool has_hessian() const override { return true; }
  Mat hessian(const Vec& theta) const override;
  const Mat& x() const { return x_; }
  const Vec& y() const { return y_; }
  /// ||Y||_1; L * burg - f is convex for any L at least this.
  double relative_smoothness() const { return y_.sum(); }

 private:
  Mat x_;
  Vec y_;
};

/// Composite g + lambda ||.||_1 with g least squares. value() is the full
/// composite objective; gradient_into() is the gradient of the smooth part.
class LassoObjective final : public Objective {
 public:
  LassoObjective(std::shared_ptr<const LeastSquaresObjective> smooth, double l1_weight);
  Index dim() const override { return smooth_->dim(); }
  double value(const Vec& theta) const override;
  void gradient_into(const Vec& theta, Vec& grad) const override { smooth_->gradient_into(theta, grad); }
  const LeastSquaresObjective& smooth() const { return *smooth_; }
  double l1_weight() const { return l1_; }

 private:
  std::shared_ptr<const LeastSquaresObjective> smooth_;
  double l1_;
};

/// Objective from callables, for tests and ad-hoc problems.
class FunctionObjective final : public Objective {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;
  FunctionObjective(Index dim, ValueFn value, GradFn grad, HessFn hess = nullptr)
      : dim_(dim), value_(std::move(value)), grad_(std::move(grad)), hess_(std::move(hess)) {}
  Index dim() const override { return dim_; }
  double value(const Vec& theta) const override { return value_(theta); }
  void gradient_into(const Vec& theta, Vec& grad) const override { grad = grad_(theta); }
  bool has_hessian() const override { return static_cast<bool>(hess_); }
  Mat hessian(const Vec& theta) const override;

 private:
  Index dim_;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
};

}  // namespace implreg
