#pragma once

#include <memory>
#include <optional>
#include <string>

#include "implreg/types.hpp"

namespace implreg {

enum class GeometryKind { euclidean, negative_entropy_simplex, burg_positive_orthant };

/// Legendre potential phi with its divergence, closed-form mirror step and
/// Bregman projection onto the constraint set.
class BregmanGeometry {
 public:
  virtual ~BregmanGeometry() = default;
  virtual GeometryKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual double potential(const Vec& u) const = 0;
  virtual Vec potential_gradient(const Vec& u) const = 0;
  /// D(u, v) = phi(u) - phi(v) - <grad phi(v), u - v>. Throws DomainError when v
  /// is outside the interior of the domain.
  virtual double divergence(const Vec& u, const Vec& v) const = 0;
  /// Strong convexity modulus w.r.t. the geometry's norm; empty when not strongly convex.
  virtual std::optional<double> strong_convexity() const = 0;
  /// theta in C and the interior of the domain.
  virtual bool interior(const Vec& theta) const = 0;
  /// Unconstrained mirror step grad phi(x) = grad phi(theta) - eta * grad.
  virtual Vec unconstrained_step(const Vec& theta, const Vec& grad, double eta) const = 0;
  /// Bregman projection onto C.
  virtual Vec project(const Vec& x) const = 0;
  /// In-place two-stage step: project(unconstrained_step(...)).
  virtual void mirror_step(Vec& theta, const Vec& grad, double eta) const;
};

class EuclideanGeometry final : public BregmanGeometry {
 public:
  explicit EuclideanGeometry(std::optional<double> radius = std::nullopt);
  GeometryKind kind() const override { return GeometryKind::euclidean; }
  std::string name() const override { return "euclidean"; }
  double potential(const Vec& u) const override;
  Vec potential_gradient(const Vec& u) const override;
  double divergence(const Vec& u, const Vec& v) const override;
  std::optional<double> strong_convexity() const override { return 1.0; }
  bool interior(const Vec& theta) const override;
  Vec unconstrained_step(const Vec& theta, const Vec& grad, double eta) const override;
  Vec project(const Vec& x) const override;
  void mirror_step(Vec& theta, const Vec& grad, double eta) const override;
  const std::optional<double>& radius() const { return radius_; }

 private:
  std::optional<double> radius_;
};

/// Negative entropy on the probability simplex (KL geometry). Floors
/// coordinates at kEntropyFloor after each step.
class EntropyGeometry final : public BregmanGeometry {
 public:
  GeometryKind kind() const override { return GeometryKind::negative_entropy_simplex; }
  std::string name() const override { return "negative_entropy"; }
  double potential(const Vec& u) const override;
  Vec potential_gradient(const Vec& u) const override;
  double divergence(const Vec& u, const Vec& v) const override;
  std::optional<double> strong_convexity() const override { return 1.0; }
  bool interior(const Vec& theta) const override;
  /// Returns theta * exp(-eta * (grad - min grad)): the scaled unconstrained step.
  Vec unconstrained_step(const Vec& theta, const Vec& grad, double eta) const override;
  Vec project(const Vec& x) const override;
};

/// Burg entropy phi(u) = -sum log u_i on the positive orthant.
class BurgGeometry final : public BregmanGeometry {
 public:
  GeometryKind kind() const override { return GeometryKind::burg_positive_orthant; }
  std::string name() const override { return "burg"; }
  double potential(const Vec& u) const override;
  Vec potential_gradient(const Vec& u) const override;
  double divergence(const Vec& u, const Vec& v) const override;
  std::optional<double> strong_convexity() const override { return std::nullopt; }
  bool interior(const Vec& theta) const override;
  Vec unconstrained_step(const Vec& theta, const Vec& grad, double eta) const override;
  Vec project(const Vec& x) const override;
};

inline constexpr double kEntropyFloor = 1e-300;

std::shared_ptr<BregmanGeometry> make_geometry(GeometryKind kind,
                                               std::optional<double> radius = std::nullopt);

/// Generalized KL: sum u log(u/v) - u + v with 0 log 0 = 0. Equals KL on the simplex.
double kl_divergence(const Vec& u, const Vec& v);

}  // namespace implreg
