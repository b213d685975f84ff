#include <Eigen/Dense>
#include <filesystem>
#include <fstream>

#include "implreg/optimizers.hpp"
#include "testutil.hpp"

using namespace implreg;
using namespace testutil;

namespace {

FunctionObjective quadratic(const Vec& center) {
  return FunctionObjective(
      center.size(), [center](const Vec& t) { return 0.5 * (t - center).squaredNorm(); },
      [center](const Vec& t) { return Vec(t - center); });
}

void check_monotone(const IterateTrace& tr, double tol = 1e-9) {
  for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.objective[k] <= tr.objective[k - 1] + tol);
}

Vec random_simplex(CounterRng& rng, Index d) {
  Vec v(d);
  for (Index i = 0; i < d; ++i) v(i) = 0.2 + rng.uniform();
  return v / v.sum();
}

}  // namespace

TEST_CASE("gd one-step examples") {
  Vec one(1);
  one << 1.0;
  const auto tr = gd_run(quadratic(one), Vec::Zero(1), StepSchedule::constant(1.0, 1));
  CHECK(tr.final_iterate()(0) == doctest::Approx(1.0));
  CHECK(tr.objective.back() == doctest::Approx(0.0));
  CHECK(tr.t == std::vector<long>{0, 1});
  CHECK(tr.tau == std::vector<double>{0.0, 1.0});
  CounterRng rng(1, 0);
  const Vec th0 = rng.normal_vector(4);
  const auto tr2 = gd_run(quadratic(Vec::Zero(4)), th0, StepSchedule::constant(1.0, 1));
  CHECK(tr2.final_iterate().norm() == 0.0);
}

TEST_CASE("gd least squares converges to normal equations") {
  CounterRng rng(2, 0);
  const Mat x = random_matrix(rng, 6, 3);
  const Vec y = rng.normal_vector(6);
  const LeastSquaresObjective f(x, y);
  const double L = f.smoothness();
  RunOptions opt;
  opt.smoothness = L;
  const auto tr = gd_run(f, Vec::Zero(3), StepSchedule::constant(1.0 / L, 500), opt);
  const Vec oracle = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  CHECK(f.gradient(tr.final_iterate()).norm() <= 1e-6);
  CHECK(max_abs_diff(tr.final_iterate(), oracle) <= 1e-5);
  check_monotone(tr);
  CHECK(tr.warnings.empty());
}

TEST_CASE("step validation") {
  CounterRng rng(3, 0);
  const LeastSquaresObjective f(random_matrix(rng, 6, 3), rng.normal_vector(6));
  RunOptions opt;
  opt.smoothness = f.smoothness();
  CHECK_THROWS(gd_run(f, Vec::Zero(3), StepSchedule::constant(2.0 / f.smoothness(), 5), opt));
  const auto tr = gd_run(f, Vec::Zero(3), StepSchedule::constant(0.01, 5));
  CHECK_FALSE(tr.warnings.empty());
}

TEST_CASE("non-finite gradient is an error") {
  const FunctionObjective bad(
      1, [](const Vec&) { return 0.0; }, [](const Vec&) { return Vec::Constant(1, std::nan("")); });
  CHECK_THROWS(gd_run(bad, Vec::Zero(1), StepSchedule::constant(0.1, 3)));
}

TEST_CASE("projected gd") {
  Vec v(2);
  v << 3, 4;
  CHECK(project_ball(v, 1.0).isApprox(Vec((Vec(2) << 0.6, 0.8).finished())));
  CHECK(project_ball(project_ball(v, 1.0), 1.0) == project_ball(v, 1.0));
  Vec c(2);
  c << 2, 0;
  const auto tr = projected_gd_run(quadratic(c), Vec::Zero(2), StepSchedule::constant(0.5, 200), 1.0);
  CHECK(tr.final_iterate()(0) == doctest::Approx(1.0));
  CHECK(std::abs(tr.final_iterate()(1)) < 1e-12);
  for (const auto& th : tr.iterates) CHECK(th.norm() <= 1.0 + 1e-12);
  CHECK_THROWS(projected_gd_run(quadratic(c), Vec::Constant(2, 5.0), StepSchedule::constant(0.5, 2), 1.0));
  CounterRng rng(4, 0);
  const LeastSquaresObjective f(random_matrix(rng, 8, 3), rng.normal_vector(8));
  const auto sched = StepSchedule::constant(0.5 / f.smoothness(), 300);
  const auto a = projected_gd_run(f, Vec::Zero(3), sched, 1e6, {RecordPolicy::every(), {}});
  const auto b = gd_run(f, Vec::Zero(3), sched, {RecordPolicy::every(), {}});
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(max_abs_diff(a.iterates[k], b.iterates[k]) <= 1e-12);
}

TEST_CASE("egd examples") {
  const Vec pi = Vec::Constant(3, 1.0 / 3);
  const auto zero = egd_run(LinearObjective(Vec::Zero(3)), pi, StepSchedule::constant(1.0, 5));
  for (const auto& th : zero.iterates) CHECK(max_abs_diff(th, pi) == 0.0);
  const auto cst = egd_run(LinearObjective(Vec::Constant(3, 2.5)), pi, StepSchedule::constant(1.0, 5));
  for (const auto& th : cst.iterates) CHECK(max_abs_diff(th, pi) <= 1e-15);
  Vec c(2);
  c << 0.0, std::log(2.0);
  const auto tr = egd_run(LinearObjective(c), Vec::Constant(2, 0.5), StepSchedule::constant(1.0, 1));
  CHECK(tr.final_iterate()(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  Vec bad(3);
  bad << 0.5, 0.5, 0.0;
  CHECK_THROWS(egd_run(LinearObjective(c.head(1).replicate(3, 1)), bad, StepSchedule::constant(1.0, 1)));
  CHECK_THROWS(egd_run(LinearObjective(Vec::Zero(3)), Vec::Constant(3, 0.5), StepSchedule::constant(1.0, 1)));
}

TEST_CASE("egd simplex preservation and monotone descent on GLMs") {
  CounterRng rng(6, 0);
  for (Family fam : {Family::gaussian, Family::bernoulli, Family::poisson}) {
    const GlmProblem p = random_problem(rng, fam, 30, 6);
    const GlmObjective f(p);
    const double L = smoothness_constant(p, SmoothnessGeometry::l1_simplex);
    RunOptions opt;
    opt.smoothness = L;
    const auto tr = egd_run(f, Vec::Constant(6, 1.0 / 6), StepSchedule::constant(1.0 / L, 400), opt);
    for (const auto& th : tr.iterates) {
      CHECK(th.minCoeff() > 0.0);
      CHECK(std::abs(th.sum() - 1.0) <= 1e-12);
    }
    check_monotone(tr);
  }
}

TEST_CASE("mirror descent reductions") {
  CounterRng rng(7, 0);
  EuclideanGeometry eu;
  EntropyGeometry kl;
  for (int k = 0; k < 50; ++k) {
    const GlmProblem p = random_problem(rng, k % 2 ? Family::bernoulli : Family::gaussian, 10, 4);
    const GlmObjective f(p);
    const double L = smoothness_constant(p, SmoothnessGeometry::euclidean);
    const auto sched = StepSchedule::constant(1.0 / L, 50);
    const RunOptions opt{RecordPolicy::every(), {}};
    const Vec th0 = rng.normal_vector(4);
    const auto a = gd_run(f, th0, sched, opt), b = mirror_descent_run(f, eu, th0, sched, opt);
    REQUIRE(a.size() == b.size());
    for (std::size_t r = 0; r < a.size(); ++r) CHECK(a.iterates[r] == b.iterates[r]);
    const Vec s0 = random_simplex(rng, 4);
    const auto c = egd_run(f, s0, sched, opt), d = mirror_descent_run(f, kl, s0, sched, opt);
    for (std::size_t r = 0; r < c.size(); ++r) CHECK(max_abs_diff(c.iterates[r], d.iterates[r]) <= 1e-12);
  }
}

TEST_CASE("mirror descent burg step and domain error") {
  BurgGeometry burg;
  Vec g(3);
  g << 0.5, 1.0, 2.0;
  const Vec th0 = Vec::Constant(3, 1.0);
  const auto tr = mirror_descent_run(LinearObjective(g), burg, th0, StepSchedule::constant(0.3, 1));
  for (Index i = 0; i < 3; ++i) CHECK(tr.final_iterate()(i) == doctest::Approx(1.0 / (1.0 + 0.3 * g(i))));
  try {
    (void)mirror_descent_run(LinearObjective(-g), burg, th0, StepSchedule::constant(0.3, 10));
    FAIL("expected domain error");
  } catch (const DomainError& e) {
    CHECK(e.iteration() >= 0);
  }
}

TEST_CASE("ista") {
  Vec v(2);
  v << 3, -0.5;
  CHECK(soft_threshold(v, 1.0) == Vec((Vec(2) << 2, 0).finished()));
  CHECK(soft_threshold(v, 0.0) == v);
  CounterRng rng(8, 0);
  for (int k = 0; k < 20; ++k) {
    const Vec r = rng.normal_vector(6);
    const double t = rng.uniform();
    const Vec s = soft_threshold(r, t);
    for (Index j = 0; j < 6; ++j) {
      const double o = r(j) > t ? r(j) - t : (r(j) < -t ? r(j) + t : 0.0);
      CHECK(s(j) == o);
    }
  }
  auto ls = std::make_shared<LeastSquaresObjective>(random_matrix(rng, 10, 4), rng.normal_vector(10));
  const auto sched = StepSchedule::constant(1.0 / ls->smoothness(), 100);
  const RunOptions opt{RecordPolicy::every(), {}};
  const auto a = ista_run(*ls, 0.0, Vec::Zero(4), sched, opt), b = gd_run(*ls, Vec::Zero(4), sched, opt);
  for (std::size_t r = 0; r < a.size(); ++r) CHECK(max_abs_diff(a.iterates[r], b.iterates[r]) <= 1e-14);
  CHECK_THROWS(ista_run(*ls, -1.0, Vec::Zero(4), sched));
  // orthogonal design X = sqrt(n) I: lasso solution is soft_threshold(X^T Y / n, lambda)
  const Index n = 5;
  const Mat x = Mat::Identity(n, n) * std::sqrt(double(n));
  const Vec y = rng.normal_vector(n) * 3.0;
  const LeastSquaresObjective g(x, y);
  const double lam = 0.4;
  const auto tr = ista_run(g, lam, Vec::Zero(n), StepSchedule::constant(1.0 / g.smoothness(), 200));
  const Vec closed = soft_threshold(x.transpose() * y / double(n), lam);
  CHECK(max_abs_diff(tr.final_iterate(), closed) <= 1e-8);
  check_monotone(tr);
  // KKT at the fixed point
  const Vec grad = g.gradient(tr.final_iterate());
  for (Index j = 0; j < n; ++j) {
    if (tr.final_iterate()(j) != 0.0) CHECK(std::abs(grad(j) + lam * (tr.final_iterate()(j) > 0 ? 1 : -1)) <= 1e-8);
    else CHECK(std::abs(grad(j)) <= lam + 1e-8);
  }
}

TEST_CASE("nolips") {
  const Mat x = Mat::Ones(4, 1);
  const Vec y = Vec::Constant(4, 2.5);
  const PlipObjective f(x, y);
  const auto tr = nolips_run(f, Vec::Constant(1, 1.0), StepSchedule::constant(1.0 / f.relative_smoothness(), 2000));
  CHECK(tr.final_iterate()(0) == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(tr.objective.back() < 1e-10);
  check_monotone(tr);
  const auto zero = nolips_run(f, Vec::Constant(1, 1.0), StepSchedule::constant(0.1, 0));
  CHECK(zero.size() == 1);
  CHECK_THROWS(PlipObjective(-x, y));
  CHECK_THROWS(nolips_run(f, Vec::Constant(1, -1.0), StepSchedule::constant(0.1, 1)));
}

TEST_CASE("overparameterized gd reaches the minimum-norm solution") {
  CounterRng rng(9, 0);
  for (int k = 0; k < 10; ++k) {
    const Mat x = random_matrix(rng, 5, 12);
    const Vec y = x * rng.normal_vector(12);
    const LeastSquaresObjective f(x, y);
    const Vec pinv = x.transpose() * (x * x.transpose()).ldlt().solve(y);
    const auto tr = gd_run(f, Vec::Zero(12), StepSchedule::constant(1.0 / f.smoothness(), 20000),
                           {RecordPolicy::every_kth(100), {}});
    CHECK(max_abs_diff(tr.final_iterate(), pinv) <= 1e-4);
    for (std::size_t r = 1; r < tr.size(); ++r)
      CHECK((tr.iterates[r] - pinv).norm() <= (tr.iterates[r - 1] - pinv).norm() + 1e-12);
  }
}

TEST_CASE("record policies and csv export") {
  CounterRng rng(10, 0);
  const LeastSquaresObjective f(random_matrix(rng, 8, 3), rng.normal_vector(8));
  const auto sched = StepSchedule::parse("0.001:500,0.01:2000");
  const auto geo = gd_run(f, Vec::Zero(3), sched);
  CHECK(geo.t.front() == 0);
  CHECK(geo.t.back() == 2500);
  CHECK(std::find(geo.t.begin(), geo.t.end(), 500) != geo.t.end());
  for (std::size_t k = 0; k < geo.size(); ++k) CHECK(geo.tau[k] == doctest::Approx(sched.accumulated_time(geo.t[k])));
  CHECK(geo.size() < 800);
  const auto ends = gd_run(f, Vec::Zero(3), sched, {RecordPolicy::every_kth(LONG_MAX), {}});
  CHECK(ends.t == std::vector<long>{0, 500, 2500});
  RecordPolicy cp = RecordPolicy::every_kth(LONG_MAX);
  cp.checkpoints = {7, 1234};
  const auto withcp = gd_run(f, Vec::Zero(3), sched, {cp, {}});
  CHECK(withcp.t == std::vector<long>{0, 7, 500, 1234, 2500});
  CHECK(geo.nearest_record(geo.tau[37] * 1.0001) == 37);
  const auto path = (std::filesystem::temp_directory_path() / "implreg_trace.csv").string();
  withcp.write_csv(path, true);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,tau,objective,theta_0,theta_1,theta_2");
  std::filesystem::remove(path);
}
