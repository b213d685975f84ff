#include <filesystem>
#include <fstream>

#include "implreg/datagen.hpp"
#include "implreg/geometry.hpp"
#include "implreg/riskbounds.hpp"
#include "testutil.hpp"

using namespace implreg;
using namespace testutil;

namespace {
constexpr double kExact = 1e-12;
bool close(double a, double b) { return std::abs(a - b) <= kExact * std::max(1.0, std::abs(b)); }
}  // namespace

TEST_CASE("spectral noise term and ridge/gd lambda") {
  SpectralTerms id{4.0, 2.0, 1.0};
  CHECK(close(spectral_noise_term(id, 1.0, 4, 1.0), 2.5));
  CHECK(close(spectral_noise_term(id, 1.0, 4, 1e-300), 1.0));
  CHECK(close(ridge_lambda_star(id, 1.0, 100, 1.0, 1.0), std::sqrt(10.0) / 20.0));
  CounterRng rng(1, 0);
  for (int k = 0; k < 50; ++k) {
    const SpectralTerms s{1 + 9 * rng.uniform(), 1 + rng.uniform(), rng.uniform()};
    const double sigma = 0.1 + rng.uniform(), delta = 0.1 + 3 * rng.uniform(), b = 0.1 + rng.uniform();
    const long n = 10 + static_cast<long>(rng.uniform() * 1000);
    CHECK(gd_lambda_star(s, sigma, n, delta, b) == 2.0 * ridge_lambda_star(s, sigma, n, delta, b));
    const double c = spectral_noise_term(s, sigma, n, delta);
    CHECK(close(ridge_bound_value(c, b) / gd_bound_value(c, b), 2.0));
  }
}

TEST_CASE("kl/egd formulas") {
  const double lam = kl_lambda_star(1.0, 100, 2, std::log(2.0), 1.0);
  CHECK(close(lam, std::sqrt((std::log(4.0) + std::log(2.0)) / 100.0)));
  CHECK(egd_lambda_star(1.0, 100, 2, std::log(2.0), 1.0) == lam);
  CHECK(close(kl_bound_value(0.7, 50, 9, 2.0, 0.3) / egd_bound_value(0.7, 50, 9, 2.0, 0.3), 2.0));
  CHECK(close(kl_bound_value(1.0, 100, 2, 1.0, 1.0), 4.0 * std::sqrt((std::log(4.0) + 1.0) / 100.0)));
  // column-norm factor: X = 2 * Gaussian with unit-norm columns scaled so C_nd = 1, then doubled
  Mat x = Mat::Zero(4, 2);
  x(0, 0) = 2.0;
  x(1, 1) = 2.0;  // ||X_j|| = 2 = sqrt(n): C_nd = 1
  const auto c1 = kl_certificate(Design(x), 1.0, 1.0, 0.5);
  const auto c2 = kl_certificate(Design(2.0 * x), 1.0, 1.0, 0.5);
  CHECK(c1.column_factor == 1.0);
  CHECK(c2.column_factor == 2.0);
  CHECK(close(c2.bound_value, 2.0 * c1.bound_value));
  const auto e1 = egd_certificate(Design(x), 1.0, 1.0, 0.5, 0.01);
  CHECK(close(c1.bound_value, 2.0 * e1.bound_value));
}

TEST_CASE("family sigma") {
  CHECK(family_sigma(GlmFamily{Family::bernoulli}, 10) == 0.5);
  Vec sd(3);
  sd << 1, 2, 3;
  CHECK(family_sigma(GlmFamily{Family::gaussian}, 3, std::nullopt, sd) == 3.0);
  CHECK_THROWS(family_sigma(GlmFamily{Family::gaussian}, 3));
  const Vec mu = Vec::Constant(20, 0.4).cwiseMax(Vec::LinSpaced(20, 0.0, 1.0));
  CHECK(close(family_sigma(GlmFamily{Family::poisson}, 20, mu), (2.0 + 2.0 / 3.0) * std::log(20.0) + 0.5));
  const double ms[5] = {0.1, 0.5, 1.0, 3.0, 10.0};
  const long ns[5] = {3, 7, 50, 200, 1000};
  for (int k = 0; k < 5; ++k) {
    const Vec m = Vec::Constant(ns[k], ms[k]);
    CHECK(close(family_sigma(GlmFamily{Family::poisson}, ns[k], m),
                (2 * ms[k] + 2.0 / 3.0) * std::log(double(ns[k])) + ms[k] / 2));
    CHECK(close(poisson_truncation_level(ms[k], ns[k]), 4.0 * (ms[k] + 1.0 / 3.0) * std::log(double(ns[k]))));
  }
  CHECK_THROWS(family_sigma(GlmFamily{Family::poisson}, 2, Vec::Ones(2)));
  CHECK_THROWS(family_sigma(GlmFamily{Family::poisson}, 5));
}

TEST_CASE("stopping time") {
  auto a = stopping_time(0.1, 1.0);
  CHECK(a.T == 10);
  CHECK(a.integral);
  auto b = stopping_time(0.3, 1.0);
  CHECK(b.T == 4);
  CHECK_FALSE(b.integral);
  auto c = stopping_time(0.25, 0.5);
  CHECK(c.T == 8);
  CHECK(c.integral);
  const SpectralTerms s{4.0, 2.0, 1.0};
  const auto g = gd_certificate(Design(Mat::Identity(4, 4) * 2.0), 1.0, 1.0, 1.0, 1e-3);
  CHECK(g.stopping_time.has_value());
  CHECK(*g.stopping_time == stopping_time(g.lambda_star, 1e-3).T);
  if (stopping_time(g.lambda_star, 1e-3).integral) CHECK(g.discretization_extra == 0.0);
  else CHECK(close(g.discretization_extra, gd_discretization_extra(1e-3, g.noise_term)));
  CHECK(close(gd_discretization_extra(0.2, 3.0), 0.3));
  const double A = std::log(8.0) + 2.0;
  CHECK(close(egd_discretization_extra(0.1, 0.5, 100, 4, 2.0, 0.3),
              0.01 * 0.125 * std::pow(A, 1.5) / (1000.0 * std::sqrt(0.3))));
  // integral stopping time gives zero extra in the certificate
  const Mat x = Mat::Identity(4, 4) * 2.0;  // Sigma = I, C = (1/4)(4 + 4 + 2) = 2.5 at sigma=1, delta=1
  const double lam = gd_lambda_star(s, 1.0, 4, 1.0, std::sqrt(2.5));  // = 1
  CHECK(close(lam, 1.0));
  const auto gi = gd_certificate(Design(x), 1.0, 1.0, std::sqrt(2.5), 0.5);
  CHECK(*gi.stopping_time == 2);
  CHECK(gi.discretization_extra == 0.0);
}

TEST_CASE("aux lemma") {
  CounterRng rng(2, 0);
  for (int k = 0; k < 1000; ++k) {
    const double a = std::exp(3 * rng.normal()), b = std::exp(3 * rng.normal()), c = std::exp(3 * rng.normal());
    CHECK(aux_lemma_gap(a, b, c) <= a * c * (1 + 1e-12) + 1e-300);
    CHECK(aux_lemma_gap(a, b, c) >= -1e-12 * (a + b));
  }
}

TEST_CASE("deterministic rhs structure and lambda* optimality") {
  CounterRng rng(3, 0);
  const Vec w = rng.normal_vector(6) * 0.1;
  const double p = 0.7, lam = 0.3;
  for (auto kind : {CertificateKind::ridge, CertificateKind::gd, CertificateKind::kl, CertificateKind::egd}) {
    const double r1 = deterministic_bound(kind, lam, w, p);
    const double r2 = deterministic_bound(kind, 2 * lam, w, p);
    const double noise = deterministic_bound(kind, lam, w, 0.0);
    const double pen = r1 - noise;
    CHECK(close(deterministic_bound(kind, 2 * lam, w, 0.0), noise / 2));
    CHECK(close(r2 - noise / 2, 2 * pen));
  }
  CHECK(close(deterministic_bound(CertificateKind::ridge, lam, w, p), w.squaredNorm() / (2 * lam) + 2 * lam * p));
  CHECK(close(deterministic_bound(CertificateKind::gd, lam, w, p), w.squaredNorm() / (2 * lam) + lam * p / 2));
  const double wi = w.cwiseAbs().maxCoeff();
  CHECK(close(deterministic_bound(CertificateKind::kl, lam, w, p), wi * wi / lam + 2 * lam * p));
  CHECK(close(deterministic_bound(CertificateKind::egd, lam, w, p), wi * wi / (2 * lam) + lam * p));
  // With ||w||^2 = C_sG and p = b^2 the ridge/gd rhs is minimized at lambda* with value = bound.
  const SpectralTerms s{5.0, 2.5, 1.5};
  const double sigma = 0.8, delta = 2.0, b = 1.3;
  const long n = 50;
  const double C = spectral_noise_term(s, sigma, n, delta);
  Vec wc = Vec::Zero(3);
  wc(0) = std::sqrt(C);
  const double lr = ridge_lambda_star(s, sigma, n, delta, b), lg = gd_lambda_star(s, sigma, n, delta, b);
  CHECK(close(deterministic_bound(CertificateKind::ridge, lr, wc, b * b), ridge_bound_value(C, b)));
  CHECK(close(deterministic_bound(CertificateKind::gd, lg, wc, b * b), gd_bound_value(C, b)));
  for (int k = 0; k < 100; ++k) {
    const double f = std::exp(2 * rng.normal());
    CHECK(deterministic_bound(CertificateKind::ridge, lr * f, wc, b * b) >= ridge_bound_value(C, b) * (1 - 1e-12));
    CHECK(deterministic_bound(CertificateKind::gd, lg * f, wc, b * b) >= gd_bound_value(C, b) * (1 - 1e-12));
  }
  // kl/egd at the sup-norm level
  const long d = 8;
  const double A = std::log(2.0 * d) + delta;
  Vec wk = Vec::Zero(d);
  wk(0) = sigma * std::sqrt(2 * A / n);
  const double lk = kl_lambda_star(sigma, n, d, delta, b);
  CHECK(close(deterministic_bound(CertificateKind::kl, lk, wk, b), kl_bound_value(sigma, n, d, delta, b)));
  CHECK(close(deterministic_bound(CertificateKind::egd, lk, wk, b), egd_bound_value(sigma, n, d, delta, b)));
}

TEST_CASE("certificate json and kind parsing") {
  const auto c = ridge_certificate(Design(Mat::Identity(3, 3)), 1.0, 2.0, 1.0);
  const auto j = c.to_json();
  CHECK(j["kind"] == "ridge");
  CHECK(j.contains("lambda_star"));
  CHECK(j.contains("bound_value"));
  CHECK(parse_certificate_kind("egd") == CertificateKind::egd);
  CHECK_THROWS(parse_certificate_kind("lasso"));
  const auto path = (std::filesystem::temp_directory_path() / "implreg_cert.jsonl").string();
  write_jsonl(path, {j, j});
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
  std::filesystem::remove(path);
}

TEST_CASE("feasible infimum") {
  CounterRng rng(4, 0);
  const GlmProblem p = random_problem(rng, Family::gaussian, 40, 5, 2.0);
  // radius large enough to contain the unconstrained minimizer: inf = min risk
  const GlmProblem rp = p.risk_problem();
  const Vec tstar = (p.x().transpose() * p.x()).ldlt().solve(p.x().transpose() * *p.mean_truth());
  const double unconstrained = prediction_risk(p, tstar);
  CHECK(std::abs(feasible_risk_infimum(p, CertificateKind::ridge, tstar.norm() * 2) - unconstrained) <= 1e-9);
  // tight radius: the infimum exceeds the unconstrained one, and beats any feasible point
  const double b = 0.3 * tstar.norm();
  const double inf = feasible_risk_infimum(p, CertificateKind::gd, b);
  CHECK(inf > unconstrained);
  for (int k = 0; k < 200; ++k) {
    Vec z = rng.normal_vector(5);
    z *= b * std::pow(rng.uniform(), 0.2) / z.norm();
    CHECK(inf <= prediction_risk(p, z) + 1e-10);
  }
  CHECK(inf >= prediction_risk(p, tstar * (b / tstar.norm())) - 0.5);  // sanity: finite and sensible
}

TEST_CASE("coverage experiment is deterministic and thread-count independent") {
  McOptions o;
  o.replicates = 3000;
  o.seed = 5;
  const ReplicateCheck chk = [](long, CounterRng& r) { return r.uniform() < 0.1; };
  const auto a = coverage_experiment("u", 0.1, o, chk);
  const auto b = coverage_experiment_serial("u", 0.1, o, chk);
  CHECK(a.violations == b.violations);
  CHECK(a.passed);
  CHECK(a.threshold == doctest::Approx(0.1 + 3 * std::sqrt(0.1 * 0.9 / 3000)));
  const ReplicateCheck bad = [](long, CounterRng& r) { return r.uniform() < 0.3; };
  CHECK_FALSE(coverage_experiment("u", 0.1, o, bad).passed);
  const ReplicateCheck thrower = [](long k, CounterRng&) -> bool {
    if (k == 3) throw std::runtime_error("boom");
    return false;
  };
  CHECK(coverage_experiment("t", 0.1, o, thrower).violations == 1);
}

TEST_CASE("monte carlo noise claims on a small design") {
  const auto data = generate(ExperimentPreset::named("gd-linear-under"), 11);
  const GlmProblem& p = data.problem;
  const auto sampler = response_sampler(Task::linear, *p.mean_truth(), 5.0);
  McOptions o;
  o.replicates = 10000;
  const auto q = monte_carlo_quadratic_noise(p, sampler, 5.0, 2.0, o);
  CHECK(q.passed);
  const auto s = monte_carlo_sup_norm(p, sampler, 5.0, 2.0, o);
  CHECK(s.passed);
  CHECK(s.to_json()["replicates"] == 10000);
}

TEST_CASE("monte carlo risk coverage, small runs") {
  McOptions o;
  o.replicates = 300;
  {
    const auto data = generate(ExperimentPreset::named("gd-logistic-under"), 3);
    const auto cert = ridge_certificate(data.problem.design(), 0.5, 2.0, data.theta_true.norm());
    CHECK(monte_carlo_validate(data.problem, response_sampler(Task::logistic, *data.problem.mean_truth(), 0.3), cert, o).passed);
  }
  {
    const auto data = generate(ExperimentPreset::named("egd-linear-under"), 3);
    const Vec pi = Vec::Constant(data.problem.d(), 1.0 / data.problem.d());
    const double b = std::max(1e-3, kl_divergence(data.theta_true, pi));
    const auto cert = kl_certificate(data.problem.design(), 1.0, 2.0, b);
    CHECK(monte_carlo_validate(data.problem, response_sampler(Task::linear, *data.problem.mean_truth(), 1.0), cert, o).passed);
  }
}
