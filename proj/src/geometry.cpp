#include "implreg/geometry.hpp"

#include <cmath>

namespace implreg {

void BregmanGeometry::mirror_step(Vec& theta, const Vec& grad, double eta) const {
  theta = project(unconstrained_step(theta, grad, eta));
}

EuclideanGeometry::EuclideanGeometry(std::optional<double> radius) : radius_(radius) {
  if (radius_ && !(*radius_ > 0.0)) throw std::invalid_argument("EuclideanGeometry: radius must be positive");
}

double EuclideanGeometry::potential(const Vec& u) const { return 0.5 * u.squaredNorm(); }

Vec EuclideanGeometry::potential_gradient(const Vec& u) const { return u; }

double EuclideanGeometry::divergence(const Vec& u, const Vec& v) const {
  require_same_size(u.size(), v.size(), "divergence");
  return 0.5 * (u - v).squaredNorm();
}

bool EuclideanGeometry::interior(const Vec& theta) const {
  if (!theta.allFinite()) return false;
  return !radius_ || theta.norm() <= *radius_ * (1.0 + 1e-12);
}

Vec EuclideanGeometry::unconstrained_step(const Vec& theta, const Vec& grad, double eta) const {
  Vec x = theta;
  x.noalias() -= eta * grad;
  return x;
}

Vec EuclideanGeometry::project(const Vec& x) const {
  if (!radius_) return x;
  const double nx = x.norm();
  if (nx <= *radius_) return x;
  return x * (*radius_ / nx);
}

void EuclideanGeometry::mirror_step(Vec& theta, const Vec& grad, double eta) const {
  theta.noalias() -= eta * grad;
  if (radius_) {
    const double nt = theta.norm();
    if (nt > *radius_) theta *= *radius_ / nt;
  }
}

double kl_divergence(const Vec& u, const Vec& v) {
  require_same_size(u.size(), v.size(), "kl_divergence");
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    if (!(v(i) > 0.0)) throw DomainError("kl_divergence: second argument has a nonpositive coordinate");
    if (u(i) < 0.0) throw DomainError("kl_divergence: first argument has a negative coordinate");
    if (u(i) > 0.0) s += u(i) * std::log(u(i) / v(i));
    s += v(i) - u(i);
  }
  return std::max(s, 0.0);
}

double EntropyGeometry::potential(const Vec& u) const {
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i)
    if (u(i) > 0.0) s += u(i) * std::log(u(i));
  return s;
}

Vec EntropyGeometry::potential_gradient(const Vec& u) const {
  return (u.array().log() + 1.0).matrix();
}

double EntropyGeometry::divergence(const Vec& u, const Vec& v) const { return kl_divergence(u, v); }

bool EntropyGeometry::interior(const Vec& theta) const {
  return theta.allFinite() && (theta.array() > 0.0).all() && std::abs(theta.sum() - 1.0) <= 1e-10;
}

Vec EntropyGeometry::unconstrained_step(const Vec& theta, const Vec& grad, double eta) const {
  require_same_size(theta.size(), grad.size(), "entropy step");
  const double gmin = grad.minCoeff();
  return (theta.array() * (-eta * (grad.array() - gmin)).exp()).matrix();
}

Vec EntropyGeometry::project(const Vec& x) const {
  Vec p = x / x.sum();
  bool floored = false;
  for (Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= kEntropyFloor)) {
      p(i) = kEntropyFloor;
      floored = true;
    }
  }
  if (floored) p /= p.sum();
  return p;
}

double BurgGeometry::potential(const Vec& u) const {
  if (!(u.array() > 0.0).all()) throw DomainError("burg potential: nonpositive coordinate");
  return -u.array().log().sum();
}

Vec BurgGeometry::potential_gradient(const Vec& u) const { return (-u.array().inverse()).matrix(); }

double BurgGeometry::divergence(const Vec& u, const Vec& v) const {
  require_same_size(u.size(), v.size(), "divergence");
  if (!(v.array() > 0.0).all()) throw DomainError("burg divergence: second argument not positive");
  if (!(u.array() > 0.0).all()) throw DomainError("burg divergence: first argument not positive");
  const auto r = u.array() / v.array();
  return std::max((r - r.log() - 1.0).sum(), 0.0);
}

bool BurgGeometry::interior(const Vec& theta) const {
  return theta.allFinite() && (theta.array() > 0.0).all();
}

Vec BurgGeometry::unconstrained_step(const Vec& theta, const Vec& grad, double eta) const {
  require_same_size(theta.size(), grad.size(), "burg step");
  const Vec denom = (theta.array().inverse() + eta * grad.array()).matrix();
  if (!(denom.array() > 0.0).all()) throw DomainError("burg step leaves the positive orthant");
  return denom.array().inverse().matrix();
}

Vec BurgGeometry::project(const Vec& x) const { return x; }

std::shared_ptr<BregmanGeometry> make_geometry(GeometryKind kind, std::optional<double> radius) {
  switch (kind) {
    case GeometryKind::euclidean: return std::make_shared<EuclideanGeometry>(radius);
    case GeometryKind::negative_entropy_simplex: return std::make_shared<EntropyGeometry>();
    case GeometryKind::burg_positive_orthant: return std::make_shared<BurgGeometry>();
  }
  throw std::invalid_argument("unknown geometry");
}

}  // namespace implreg
