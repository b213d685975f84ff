#include "implreg/aggregation.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "implreg/csv.hpp"
#include "implreg/geometry.hpp"
#include "implreg/objective.hpp"
#include "implreg/optimizers.hpp"

namespace implreg {

ModelCollection::ModelCollection(Vec empirical_risks, std::optional<Vec> population_risks, std::optional<Vec> prior,
                                 std::vector<std::string> ids)
    : empirical_(std::move(empirical_risks)), population_(std::move(population_risks)), ids_(std::move(ids)) {
  if (empirical_.size() < 1) throw std::invalid_argument("ModelCollection: empty");
  require_finite(empirical_, "empirical risks");
  if (population_) {
    require_same_size(empirical_.size(), population_->size(), "population risks");
    require_finite(*population_, "population risks");
  }
  if (prior) {
    require_same_size(empirical_.size(), prior->size(), "prior");
    if (!(prior->array() > 0.0).all() || !prior->allFinite())
      throw std::invalid_argument("ModelCollection: prior weights must be positive and finite");
    prior_ = *prior / prior->sum();
  } else {
    prior_ = Vec::Constant(empirical_.size(), 1.0 / static_cast<double>(empirical_.size()));
  }
  if (ids_.empty())
    for (Index i = 0; i < empirical_.size(); ++i) ids_.push_back(std::to_string(i));
  if (static_cast<Index>(ids_.size()) != empirical_.size()) throw DimensionError("ModelCollection: ids size");
}

ModelCollection read_collection_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const std::string t = csv::trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = csv::split_line(t);
    break;
  }
  auto find = [&](const std::string& name) -> int {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  };
  const int c_id = find("model_id"), c_emp = find("empirical_risk"), c_pop = find("population_risk"),
            c_pri = find("prior_weight");
  if (c_id < 0 || c_emp < 0) throw std::runtime_error(path + ": need model_id and empirical_risk columns");
  std::vector<std::string> ids;
  std::vector<double> emp, pop, pri;
  while (std::getline(in, line)) {
    const std::string t = csv::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = csv::split_line(t);
    if (f.size() != header.size()) throw std::runtime_error(path + ": ragged row: " + t);
    double v;
    ids.push_back(f[static_cast<std::size_t>(c_id)]);
    if (!csv::parse_double(f[static_cast<std::size_t>(c_emp)], v)) throw std::runtime_error(path + ": bad risk: " + t);
    emp.push_back(v);
    if (c_pop >= 0) {
      if (!csv::parse_double(f[static_cast<std::size_t>(c_pop)], v)) throw std::runtime_error(path + ": bad risk: " + t);
      pop.push_back(v);
    }
    if (c_pri >= 0) {
      if (!csv::parse_double(f[static_cast<std::size_t>(c_pri)], v)) throw std::runtime_error(path + ": bad prior: " + t);
      pri.push_back(v);
    }
  }
  auto to_vec = [](const std::vector<double>& v) { return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()))); };
  std::optional<Vec> p, q;
  if (c_pop >= 0) p = to_vec(pop);
  if (c_pri >= 0) q = to_vec(pri);
  return ModelCollection(to_vec(emp), p, q, ids);
}

Vec gibbs_posterior(const ModelCollection& c, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("gibbs_posterior: lambda must be positive");
  const Vec& r = c.empirical_risks();
  const Vec logw = c.prior().array().log() - r.array() / lambda;
  const double m = logw.maxCoeff();
  Vec w = (logw.array() - m).exp().matrix();
  return w / w.sum();
}

EquivalenceResult egd_equivalence_check(const ModelCollection& c, double eta, long T) {
  if (T < 1) throw std::invalid_argument("egd_equivalence_check: T must be >= 1");
  const LinearObjective f(c.empirical_risks());
  RunOptions ro;
  ro.record = RecordPolicy::every_kth(std::numeric_limits<long>::max());
  EquivalenceResult res;
  res.egd = egd_run(f, c.prior(), StepSchedule::constant(eta, T), ro).final_iterate();
  res.lambda = 1.0 / (eta * static_cast<double>(T));
  res.gibbs = gibbs_posterior(c, res.lambda);
  res.max_deviation = (res.egd - res.gibbs).cwiseAbs().maxCoeff();
  return res;
}

double expected_risk(const ModelCollection& c, const Vec& weights) {
  if (!c.population_risks()) throw std::invalid_argument("expected_risk: population risks absent");
  require_same_size(c.size(), weights.size(), "weights");
  return c.population_risks()->dot(weights);
}

double risk_gap_bound(const ModelCollection& c, AggregateKind kind, double lambda, const Vec& reference) {
  if (!c.population_risks()) throw std::invalid_argument("risk_gap_bound: population risks absent");
  if (!(lambda > 0.0)) throw std::invalid_argument("risk_gap_bound: lambda must be positive");
  const double dev = (c.empirical_risks() - *c.population_risks()).lpNorm<Eigen::Infinity>();
  const double kl = kl_divergence(reference, c.prior());
  if (kind == AggregateKind::gibbs) return dev * dev / lambda + 2.0 * lambda * kl;
  return dev * dev / (2.0 * lambda) + lambda * kl;
}

HoeffdingChoice hoeffding_lambda(double C, long n, long cardinality, double delta, double b) {
  if (!(C > 0.0) || n < 1 || cardinality < 1 || !(b > 0.0)) throw std::invalid_argument("hoeffding_lambda: bad input");
  const double a = std::log(2.0 * static_cast<double>(cardinality)) + delta;
  const double nn = static_cast<double>(n);
  return {0.5 * C * std::sqrt(a / (nn * b)), 2.0 * C * std::sqrt(b * a / nn)};
}

double kl_ball_linear_infimum(const Vec& r, const Vec& z, double b) {
  require_same_size(r.size(), z.size(), "kl_ball_linear_infimum");
  if (b < 0.0) throw std::invalid_argument("kl_ball_linear_infimum: negative radius");
  const Vec zn = z / z.sum();
  const double rmin = r.minCoeff();
  double mass = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    if (r(i) == rmin) mass += zn(i);
  if (b >= -std::log(mass)) return rmin;
  auto tilt = [&](double mu) {
    Vec logw = zn.array().log() - (r.array() - rmin) / mu;
    const double m = logw.maxCoeff();
    Vec w = (logw.array() - m).exp().matrix();
    return Vec(w / w.sum());
  };
  const double spread = std::max(r.maxCoeff() - rmin, 1e-300);
  double lo = std::log(spread) - 40.0, hi = std::log(spread) + 40.0;  // log mu
  Vec best = zn;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec w = tilt(std::exp(mid));
    if (kl_divergence(w, zn) <= b) {
      hi = mid;
      best = w;
    } else {
      lo = mid;
    }
  }
  return r.dot(best);
}

CoverageReport monte_carlo_hoeffding(const Vec& R, long n, double delta, double b, const McOptions& options) {
  if ((R.array() < 0.0).any() || (R.array() > 1.0).any())
    throw std::invalid_argument("monte_carlo_hoeffding: risks must lie in [0,1]");
  const Index k = R.size();
  const Vec z = Vec::Constant(k, 1.0 / static_cast<double>(k));
  const HoeffdingChoice hc = hoeffding_lambda(1.0, n, k, delta, b);
  const double inf_risk = kl_ball_linear_infimum(R, z, b);
  return coverage_experiment("hoeffding aggregation bound", std::exp(-delta), options, [&](long, CounterRng& rng) {
    Vec emp(k);
    for (Index j = 0; j < k; ++j) {
      long hits = 0;
      for (long i = 0; i < n; ++i) hits += rng.uniform() < R(j) ? 1 : 0;
      emp(j) = static_cast<double>(hits) / static_cast<double>(n);
    }
    const ModelCollection c(emp, R);
    return expected_risk(c, gibbs_posterior(c, hc.lambda)) - inf_risk > hc.bound;
  });
}

}  // namespace implreg
