#include <Eigen/Dense>

#include "implreg/basicineq.hpp"
#include "implreg/explicit.hpp"
#include "testutil.hpp"

using namespace implreg;
using namespace testutil;

namespace {

Vec random_simplex(CounterRng& rng, Index d) {
  Vec v(d);
  for (Index i = 0; i < d; ++i) v(i) = -std::log(1.0 - rng.uniform());
  return v / v.sum();
}

std::vector<Vec> random_points(CounterRng& rng, Index d, int count, double scale) {
  std::vector<Vec> zs;
  for (int k = 0; k < count; ++k) zs.push_back(rng.normal_vector(d) * scale);
  return zs;
}

RidgeSolver least_squares_ridge(const LeastSquaresObjective& f) {
  return [&f](double lambda, const Vec& c) -> Vec {
    const Index n = f.x().rows();
    const Mat a = f.x().transpose() * f.x() / double(n) + 2.0 * lambda * Mat::Identity(f.dim(), f.dim());
    return a.ldlt().solve(f.x().transpose() * f.y() / double(n) + 2.0 * lambda * c);
  };
}

}  // namespace

TEST_CASE("bound examples") {
  CounterRng rng(1, 0);
  const Vec z = rng.normal_vector(3), th = rng.normal_vector(3);
  CHECK(gd_bound(z, th, z, 2.0) == doctest::Approx(-(th - z).squaredNorm() / 4.0));
  CHECK(gd_bound(th, z, z, 2.0) == doctest::Approx((th - z).squaredNorm() / 4.0));
  EuclideanGeometry eu;
  const Vec t0 = rng.normal_vector(3);
  CHECK(md_bound(eu, t0, th, z, 0.7) == doctest::Approx(gd_bound(t0, th, z, 0.7)).epsilon(1e-13));
  // f = (theta-1)^2 / 2, theta0 = 0, eta = 1, T = 1, z = 1
  const FunctionObjective f(
      1, [](const Vec& t) { return 0.5 * (t(0) - 1) * (t(0) - 1); }, [](const Vec& t) { return Vec::Constant(1, t(0) - 1); });
  const auto tr = gd_run(f, Vec::Zero(1), StepSchedule::constant(1.0, 1));
  const auto ledger = verify_trace(tr, f, eu, {Vec::Ones(1)});
  REQUIRE(ledger.rows.size() == 1);
  CHECK(ledger.rows[0].lhs == doctest::Approx(0.0));
  CHECK(ledger.rows[0].rhs == doctest::Approx(0.5));
  CHECK(ledger.rows[0].gap == doctest::Approx(0.5));
  EntropyGeometry kl;
  Vec u = Vec::Constant(2, 0.5), e(2);
  e << 1, 0;
  CHECK(divergence(kl, u, u) == 0.0);
  CHECK(divergence(kl, e, u) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("verify_trace passes on GD and catches a corrupted trace") {
  CounterRng rng(2, 0);
  const LeastSquaresObjective f(random_matrix(rng, 20, 5), rng.normal_vector(20));
  const auto tr = gd_run(f, Vec::Zero(5), StepSchedule::constant(1.0 / f.smoothness(), 300));
  const auto zs = random_points(rng, 5, 50, 1.0);
  EuclideanGeometry eu;
  const auto ledger = verify_trace(tr, f, eu, zs);
  CHECK(ledger.passed);
  CHECK(ledger.min_gap >= -1e-9);
  CHECK(ledger.rows.size() == (tr.size() - 1) * zs.size());
  const auto serial = verify_trace_serial(tr, f, eu, zs);
  REQUIRE(serial.rows.size() == ledger.rows.size());
  for (std::size_t k = 0; k < serial.rows.size(); ++k) CHECK(serial.rows[k].gap == ledger.rows[k].gap);
  CHECK(serial.min_gap == ledger.min_gap);

  IterateTrace bad = tr;
  const std::size_t r = bad.size() / 2;
  bad.iterates[r] += Vec::Constant(5, 5.0);
  bad.objective[r] = f.value(bad.iterates[r]);
  const auto caught = verify_trace(bad, f, eu, zs);
  CHECK_FALSE(caught.passed);
  CHECK(caught.worst_T == bad.t[r]);
}

TEST_CASE("basic inequality across algorithms") {
  CounterRng rng(3, 0);
  EuclideanGeometry eu;
  EntropyGeometry kl;
  BurgGeometry burg;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 10 + rep, d = 2 + rep % 8;
    const GlmProblem p = random_problem(rng, Family(rep % 3), n, d);
    const GlmObjective f(p);
    const auto zs = random_points(rng, d, 10, 1.0);
    std::vector<Vec> simplex;
    for (int k = 0; k < 10; ++k) simplex.push_back(random_simplex(rng, d));
    if (p.family().kind != Family::poisson) {
      const double L = smoothness_constant(p, SmoothnessGeometry::euclidean);
      const auto gd = gd_run(f, Vec::Zero(d), StepSchedule::parse(std::to_string(0.5 / L) + ":50," + std::to_string(1.0 / L) + ":100"));
      CHECK(verify_trace(gd, f, eu, zs).min_gap >= -1e-9);
      const auto pgd = projected_gd_run(f, Vec::Zero(d), StepSchedule::constant(1.0 / L, 100), 0.3);
      std::vector<Vec> inball;
      for (const auto& z : zs) inball.push_back(project_ball(z, 0.3));
      CHECK(verify_trace(pgd, f, EuclideanGeometry(0.3), inball).min_gap >= -1e-9);
      const auto md = mirror_descent_run(f, eu, Vec::Zero(d), StepSchedule::constant(1.0 / L, 100));
      CHECK(verify_trace(md, f, eu, zs).min_gap >= -1e-9);
    }
    const double Ls = smoothness_constant(p, SmoothnessGeometry::l1_simplex);
    const Vec pi = Vec::Constant(d, 1.0 / d);
    const auto egd = egd_run(f, pi, StepSchedule::constant(1.0 / Ls, 150));
    CHECK(verify_trace(egd, f, kl, simplex).min_gap >= -1e-9);
    const auto md2 = mirror_descent_run(f, kl, pi, StepSchedule::constant(1.0 / Ls, 150));
    CHECK(verify_trace(md2, f, kl, simplex).min_gap >= -1e-9);

    // ISTA on the composite least-squares + l1 objective
    auto ls = std::make_shared<LeastSquaresObjective>(random_matrix(rng, n, d), rng.normal_vector(n));
    const LassoObjective comp(ls, 0.2);
    const auto ista = ista_run(*ls, 0.2, Vec::Zero(d), StepSchedule::constant(1.0 / ls->smoothness(), 150));
    CHECK(verify_trace(ista, comp, eu, zs).min_gap >= -1e-9);

    // NoLips and generic Burg mirror descent on a positive inverse problem
    Mat xp(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) xp(i, j) = 0.1 + rng.uniform();
    Vec truth(d);
    for (Index j = 0; j < d; ++j) truth(j) = 0.5 + rng.uniform();
    Vec yp = xp * truth;
    for (Index i = 0; i < n; ++i) yp(i) *= 0.8 + 0.4 * rng.uniform();
    const PlipObjective plip(xp, yp);
    std::vector<Vec> pos;
    for (int k = 0; k < 10; ++k) pos.push_back((rng.normal_vector(d).array().exp()).matrix());
    const auto nl = nolips_run(plip, Vec::Ones(d), StepSchedule::constant(1.0 / plip.relative_smoothness(), 150));
    CHECK(verify_trace(nl, plip, burg, pos).min_gap >= -1e-9);
    const auto mb = mirror_descent_run(plip, burg, Vec::Ones(d), StepSchedule::constant(1.0 / plip.relative_smoothness(), 150));
    CHECK(verify_trace(mb, plip, burg, pos).min_gap >= -1e-9);
  }
}

TEST_CASE("three-point inequality and telescoping along EGD") {
  CounterRng rng(4, 0);
  EntropyGeometry kl;
  for (int rep = 0; rep < 5; ++rep) {
    const GlmProblem p = random_problem(rng, Family::bernoulli, 30, 6);
    const GlmObjective f(p);
    const double eta = 1.0 / smoothness_constant(p, SmoothnessGeometry::l1_simplex);
    const auto tr = egd_run(f, Vec::Constant(6, 1.0 / 6), StepSchedule::constant(eta, 200), {RecordPolicy::every(), {}});
    const Vec z = random_simplex(rng, 6);
    double sum_steps = 0.0;
    for (std::size_t t = 0; t + 1 < tr.size(); ++t) {
      const Vec& a = tr.iterates[t];
      const Vec& b = tr.iterates[t + 1];
      const double lhs = eta * f.gradient(a).dot(b - z);
      const double rhs = kl.divergence(z, a) - kl.divergence(z, b) - kl.divergence(b, a);
      CHECK(lhs <= rhs + 1e-9);
      sum_steps += kl.divergence(z, a) - kl.divergence(z, b);
    }
    const double aggregate = kl.divergence(z, tr.initial()) - kl.divergence(z, tr.final_iterate());
    CHECK(std::abs(sum_steps - aggregate) <= 1e-8);
  }
}

TEST_CASE("gd envelope sandwich at 20 values of T") {
  CounterRng rng(5, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const LeastSquaresObjective f(random_matrix(rng, 15, 6), rng.normal_vector(15));
    RecordPolicy every = RecordPolicy::every();
    const auto tr = gd_run(f, Vec::Zero(6), StepSchedule::constant(1.0 / f.smoothness(), 400), {every, {}});
    const auto solver = least_squares_ridge(f);
    for (int k = 1; k <= 20; ++k) {
      const auto e = envelope_gd(f, tr, static_cast<std::size_t>(k * 20), solver);
      CHECK(e.lambda == doctest::Approx(1.0 / tr.tau[k * 20]));
      CHECK(e.holds(1e-7));
    }
  }
}

TEST_CASE("gd envelope converges to min f when strongly convex") {
  CounterRng rng(6, 0);
  const LeastSquaresObjective f(random_matrix(rng, 30, 3), rng.normal_vector(30));
  const auto tr = gd_run(f, Vec::Zero(3), StepSchedule::constant(1.0 / f.smoothness(), 5000));
  const Vec opt = (f.x().transpose() * f.x()).ldlt().solve(f.x().transpose() * f.y());
  const auto e = envelope_gd(f, tr, tr.size() - 1, least_squares_ridge(f));
  CHECK(std::abs(e.lower - f.value(opt)) < 1e-3);
  CHECK(std::abs(e.upper - f.value(opt)) < 1e-3);
  CHECK(std::abs(e.mid - f.value(opt)) < 1e-3);
}

TEST_CASE("egd envelope on random simplex problems") {
  CounterRng rng(7, 0);
  for (int rep = 0; rep < 6; ++rep) {
    const GlmProblem p = random_problem(rng, rep % 2 ? Family::gaussian : Family::bernoulli, 40, 5, 2.0);
    const GlmObjective f(p);
    const Vec pi = Vec::Constant(5, 0.2);
    const double eta = 1.0 / smoothness_constant(p, SmoothnessGeometry::l1_simplex);
    const auto tr = egd_run(f, pi, StepSchedule::constant(eta, 300), {RecordPolicy::every(), {}});
    const KlSolver solver = [&](double lambda) { return kl_glm_solve(p, lambda, pi).theta; };
    for (int k = 1; k <= 10; ++k) {
      const auto e = envelope_egd(f, tr, static_cast<std::size_t>(k * 30), solver);
      CHECK(e.lambda == doctest::Approx(1.0 / tr.tau[k * 30]));
      CHECK(e.holds(1e-7));
      CHECK(e.points_checked > 10);
    }
  }
  // theta_T = pi gives a zero penalty term
  const Vec pi = Vec::Constant(2, 0.5);
  const LinearObjective zero(Vec::Zero(2));
  const auto tr = egd_run(zero, pi, StepSchedule::constant(1.0, 3));
  const auto e = envelope_egd(zero, tr, 3, [&](double) { return pi; });
  CHECK(e.mid == 0.0);
  CHECK(l1_squared_penalty(pi, pi) == 0.0);
}
