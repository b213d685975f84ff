#include "implreg/basicineq.hpp"
#include "implreg/geometry.hpp"
#include "testutil.hpp"

using namespace implreg;
using namespace testutil;

namespace {
Vec random_simplex(CounterRng& rng, Index d) {
  Vec v(d);
  for (Index i = 0; i < d; ++i) v(i) = -std::log(1.0 - rng.uniform());
  return v / v.sum();
}
}  // namespace

TEST_CASE("divergence examples") {
  EntropyGeometry kl;
  const Vec u2 = Vec::Constant(2, 0.5);
  CHECK(kl.divergence(u2, u2) == doctest::Approx(0.0));
  Vec e1(2);
  e1 << 1.0, 0.0;
  CHECK(kl.divergence(e1, u2) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(kl.divergence(u2, e1), DomainError);
  EuclideanGeometry eu;
  CounterRng rng(1, 0);
  const Vec a = rng.normal_vector(5), b = rng.normal_vector(5);
  CHECK(eu.divergence(a, b) == doctest::Approx(0.5 * (a - b).squaredNorm()).epsilon(1e-14));
  BurgGeometry burg;
  const Vec p = Vec::Constant(3, 2.0), q = Vec::Constant(3, 1.0);
  CHECK(burg.divergence(p, q) == doctest::Approx(3 * (2.0 - std::log(2.0) - 1.0)));
  CHECK_THROWS(burg.divergence(p, -q));
}

TEST_CASE("divergence matches definition and lower bounds") {
  CounterRng rng(2, 0);
  EntropyGeometry kl;
  EuclideanGeometry eu;
  BurgGeometry burg;
  for (int k = 0; k < 200; ++k) {
    const Index d = 2 + static_cast<Index>(rng.uniform() * 10);
    const Vec u = random_simplex(rng, d), v = random_simplex(rng, d);
    for (const BregmanGeometry* g : {static_cast<const BregmanGeometry*>(&kl),
                                     static_cast<const BregmanGeometry*>(&eu),
                                     static_cast<const BregmanGeometry*>(&burg)}) {
      const double def = g->potential(u) - g->potential(v) - g->potential_gradient(v).dot(u - v);
      CHECK(std::abs(g->divergence(u, v) - def) <= 1e-10);
      CHECK(g->divergence(u, v) >= 0.0);
      CHECK(g->divergence(u, u) == doctest::Approx(0.0));
    }
    const double l1 = (u - v).lpNorm<1>();
    CHECK(kl.divergence(u, v) >= 0.5 * l1 * l1 - 1e-12);  // Pinsker
    CHECK(eu.divergence(u, v) >= 0.5 * (u - v).squaredNorm() - 1e-12);
    const Vec pi = Vec::Constant(d, 1.0 / d);
    const double l1p = (u - pi).lpNorm<1>();
    const double dd = static_cast<double>(d);
    CHECK(kl.divergence(u, pi) <= reverse_pinsker_constant(d) * l1p + 1e-12);
    CHECK(kl.divergence(u, pi) <= 0.5 * dd * l1p * l1p + 1e-12);
  }
  CHECK(burg.strong_convexity() == std::nullopt);
  CHECK(kl.strong_convexity() == 1.0);
}

TEST_CASE("reverse pinsker constant is sharp at vertices") {
  EntropyGeometry kl;
  for (Index d : {2, 3, 7, 40}) {
    const Vec pi = Vec::Constant(d, 1.0 / d);
    Vec e = Vec::Zero(d);
    e(0) = 1.0;
    const double l1 = (e - pi).lpNorm<1>();
    CHECK(kl.divergence(e, pi) == doctest::Approx(reverse_pinsker_constant(d) * l1).epsilon(1e-13));
    // the log(d)/2 constant is too small at a vertex
    CHECK(kl.divergence(e, pi) > 0.5 * std::log(double(d)) * l1);
  }
}

TEST_CASE("mirror steps") {
  EntropyGeometry kl;
  Vec th = Vec::Constant(2, 0.5), g(2);
  g << 0.0, std::log(2.0);
  kl.mirror_step(th, g, 1.0);
  CHECK(th(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(th(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  // huge gradients: floored, still interior
  Vec t2 = Vec::Constant(3, 1.0 / 3), g2(3);
  g2 << 0.0, 1e6, 2e6;
  kl.mirror_step(t2, g2, 1.0);
  CHECK(kl.interior(t2));
  CHECK(t2.sum() == doctest::Approx(1.0).epsilon(1e-14));

  BurgGeometry burg;
  Vec b(2), gb(2);
  b << 1.0, 2.0;
  gb << 0.5, 1.0;
  Vec out = b;
  burg.mirror_step(out, gb, 0.5);
  CHECK(out(0) == doctest::Approx(1.0 / (1.0 + 0.25)));
  CHECK(out(1) == doctest::Approx(1.0 / (0.5 + 0.5)));
  Vec bad = b, gneg(2);
  gneg << -10.0, 0.0;
  CHECK_THROWS_AS(burg.mirror_step(bad, gneg, 1.0), DomainError);

  EuclideanGeometry ball(1.0);
  Vec e = Vec::Zero(2), ge(2);
  ge << -3.0, -4.0;
  ball.mirror_step(e, ge, 1.0);
  CHECK(e(0) == doctest::Approx(0.6));
  CHECK(e(1) == doctest::Approx(0.8));
}

TEST_CASE("mirror step is the argmin of the linearized problem (2-D grid oracle)") {
  // minimise eta <g, x> + D(x, theta) over a grid; compare to the closed form.
  CounterRng rng(5, 0);
  BurgGeometry burg;
  EntropyGeometry kl;
  for (int k = 0; k < 5; ++k) {
    Vec th(2);
    th << 0.5 + rng.uniform(), 0.5 + rng.uniform();
    const Vec g = rng.normal_vector(2) * 0.3;
    Vec closed = th;
    burg.mirror_step(closed, g, 0.5);
    // coordinate separable: 1-D golden-section per coordinate
    for (Index i = 0; i < 2; ++i) {
      double lo = 1e-3, hi = 20.0;
      auto obj = [&](double x) { return 0.5 * g(i) * x + x / th(i) - std::log(x / th(i)) - 1.0; };
      for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        (obj(m1) < obj(m2) ? hi : lo) = (obj(m1) < obj(m2) ? m2 : m1);
      }
      CHECK(std::abs(0.5 * (lo + hi) - closed(i)) <= 1e-4);
    }
    // simplex: parametrise x = (s, 1-s)
    Vec p(2);
    p << 0.2 + 0.6 * rng.uniform(), 0.0;
    p(1) = 1.0 - p(0);
    Vec ck = p;
    kl.mirror_step(ck, g, 1.0);
    double best = 1e300, arg = 0.0;
    for (int j = 1; j < 100000; ++j) {
      const double s = j / 100000.0;
      Vec x(2);
      x << s, 1 - s;
      const double v = g.dot(x) + kl.divergence(x, p);
      if (v < best) best = v, arg = s;
    }
    CHECK(std::abs(arg - ck(0)) <= 1e-4);
  }
}

TEST_CASE("kl_divergence generalized") {
  Vec u(2), v(2);
  u << 2.0, 0.0;
  v << 1.0, 1.0;
  CHECK(kl_divergence(u, v) == doctest::Approx(2 * std::log(2.0) - 2 + 2));
  CHECK_THROWS(kl_divergence(v, u));
  CHECK(make_geometry(GeometryKind::burg_positive_orthant)->name() == "burg");
}
