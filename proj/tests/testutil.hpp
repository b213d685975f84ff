#pragma once

#include <doctest.h>

#include "implreg/glm.hpp"
#include "implreg/rng.hpp"

namespace testutil {

using implreg::Family;
using implreg::GlmFamily;
using implreg::GlmProblem;
using implreg::Index;
using implreg::Mat;
using implreg::Vec;

inline Mat random_matrix(implreg::CounterRng& rng, Index n, Index d) {
  Mat x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

/// Small GLM with responses drawn from the model at a random theta.
inline GlmProblem random_problem(implreg::CounterRng& rng, Family fam, Index n, Index d, double scale = 0.5) {
  Mat x = random_matrix(rng, n, d);
  Vec theta = rng.normal_vector(d) * (scale / std::sqrt(static_cast<double>(d)));
  const GlmFamily family{fam};
  Vec mu(n), y(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = x.row(i).dot(theta);
    mu(i) = family.mean(eta);
    switch (fam) {
      case Family::gaussian: y(i) = mu(i) + rng.normal(); break;
      case Family::bernoulli: y(i) = rng.uniform() < mu(i) ? 1.0 : 0.0; break;
      case Family::poisson: y(i) = rng.poisson(mu(i)); break;
    }
  }
  return GlmProblem(std::move(x), std::move(y), family, mu);
}

inline double max_abs_diff(const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testutil
