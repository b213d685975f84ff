#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace implreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Shape disagreement between arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exponential overflow in a Poisson linear predictor.
class SaturationError : public std::overflow_error {
 public:
  SaturationError(const std::string& what, Index index)
      : std::overflow_error(what), index_(index) {}
  Index index() const { return index_; }

 private:
  Index index_;
};

/// An iterate left the interior of the geometry's domain, or a gradient
/// became non-finite. iteration() is -1 when not tied to an optimizer step.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, long iteration = -1)
      : std::domain_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_same_size(Index a, Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(a) +
                         ", got " + std::to_string(b));
  }
}

inline void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace implreg
