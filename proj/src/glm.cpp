#include "implreg/glm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "implreg/csv.hpp"
#include "implreg/rng.hpp"

namespace implreg {

Design::Design(Mat x) : x_(std::move(x)) {
  if (x_.rows() < 1 || x_.cols() < 1) throw DimensionError("Design: need n >= 1 and d >= 1");
  if (!x_.allFinite()) throw std::invalid_argument("Design: non-finite entry");
  column_norms_ = x_.colwise().norm().transpose();
  row_norms_ = x_.rowwise().norm();
  row_max_abs_ = x_.cwiseAbs().rowwise().maxCoeff();
}

double GlmFamily::cumulant(double xi) const {
  switch (kind) {
    case Family::gaussian:
      return 0.5 * xi * xi;
    case Family::bernoulli:
      return std::max(xi, 0.0) + std::log1p(std::exp(-std::abs(xi)));
    case Family::poisson:
      return std::exp(xi);
  }
  return 0.0;
}

double GlmFamily::mean(double xi) const {
  switch (kind) {
    case Family::gaussian:
      return xi;
    case Family::bernoulli:
      if (xi >= 0) return 1.0 / (1.0 + std::exp(-xi));
      else {
        const double e = std::exp(xi);
        return e / (1.0 + e);
      }
    case Family::poisson:
      return std::exp(xi);
  }
  return 0.0;
}

double GlmFamily::variance(double xi) const {
  switch (kind) {
    case Family::gaussian:
      return 1.0;
    case Family::bernoulli: {
      const double p = mean(xi);
      return p * (1.0 - p);
    }
    case Family::poisson:
      return std::exp(xi);
  }
  return 0.0;
}

std::string GlmFamily::name() const {
  switch (kind) {
    case Family::gaussian: return "gaussian";
    case Family::bernoulli: return "bernoulli";
    case Family::poisson: return "poisson";
  }
  return "?";
}

GlmFamily GlmFamily::parse(const std::string& name) {
  if (name == "gaussian" || name == "linear") return {Family::gaussian};
  if (name == "bernoulli" || name == "logistic") return {Family::bernoulli};
  if (name == "poisson") return {Family::poisson};
  throw std::invalid_argument("unknown family: " + name);
}

namespace {

void validate_response(const Vec& y, const GlmFamily& family, const char* what) {
  require_finite(y, what);
  for (Index i = 0; i < y.size(); ++i) {
    if (family.kind == Family::bernoulli && (y(i) < 0.0 || y(i) > 1.0))
      throw std::invalid_argument(std::string(what) + ": Bernoulli response outside [0,1]");
    if (family.kind == Family::poisson && y(i) < 0.0)
      throw std::invalid_argument(std::string(what) + ": negative Poisson response");
  }
}

}  // namespace

GlmProblem::GlmProblem(std::shared_ptr<const Design> design, Vec response, GlmFamily family,
                       std::optional<Vec> mean_truth)
    : design_(std::move(design)), y_(std::move(response)), family_(family), mean_(std::move(mean_truth)) {
  if (!design_) throw std::invalid_argument("GlmProblem: null design");
  require_same_size(design_->n(), y_.size(), "GlmProblem response");
  validate_response(y_, family_, "GlmProblem response");
  if (mean_) {
    require_same_size(design_->n(), mean_->size(), "GlmProblem mean_truth");
    require_finite(*mean_, "GlmProblem mean_truth");
  }
}

GlmProblem::GlmProblem(Mat x, Vec response, GlmFamily family, std::optional<Vec> mean_truth)
    : GlmProblem(std::make_shared<const Design>(std::move(x)), std::move(response), family,
                 std::move(mean_truth)) {}

GlmProblem GlmProblem::with_response(Vec response) const {
  return GlmProblem(design_, std::move(response), family_, mean_);
}

GlmProblem GlmProblem::risk_problem() const {
  if (!mean_) throw std::invalid_argument("risk_problem: mean_truth absent");
  // mean_truth is not validated against the family, so bypass the constructor checks.
  GlmProblem p = *this;
  p.y_ = *mean_;
  return p;
}

Vec linear_predictor(const GlmProblem& problem, const Vec& theta) {
  require_same_size(problem.d(), theta.size(), "theta");
  require_finite(theta, "theta");
  Vec eta = problem.x() * theta;
  if (problem.family().kind == Family::poisson) {
    for (Index i = 0; i < eta.size(); ++i) {
      if (!(eta(i) <= kPoissonSaturation)) {
        throw SaturationError("Poisson linear predictor " + std::to_string(eta(i)) +
                                  " exceeds saturation limit at index " + std::to_string(i),
                              i);
      }
    }
  }
  return eta;
}

namespace {

double cumulant_sum(const GlmFamily& f, const Vec& eta) {
  double s = 0.0;
  for (Index i = 0; i < eta.size(); ++i) s += f.cumulant(eta(i));
  return s;
}

Vec mean_vector(const GlmFamily& f, const Vec& eta) {
  Vec m(eta.size());
  for (Index i = 0; i < eta.size(); ++i) m(i) = f.mean(eta(i));
  return m;
}

}  // namespace

double loss(const GlmProblem& problem, const Vec& theta) {
  const Vec eta = linear_predictor(problem, theta);
  const double n = static_cast<double>(problem.n());
  return (-problem.y().dot(eta) + cumulant_sum(problem.family(), eta)) / n;
}

Vec loss_gradient(const GlmProblem& problem, const Vec& theta) {
  Vec g;
  loss_and_gradient(problem, theta, g);
  return g;
}

double loss_and_gradient(const GlmProblem& problem, const Vec& theta, Vec& grad) {
  const Vec eta = linear_predictor(problem, theta);
  const double n = static_cast<double>(problem.n());
  const Vec resid = mean_vector(problem.family(), eta) - problem.y();
  grad.noalias() = problem.x().transpose() * resid / n;
  return (-problem.y().dot(eta) + cumulant_sum(problem.family(), eta)) / n;
}

Mat loss_hessian(const GlmProblem& problem, const Vec& theta, bool* clamped) {
  const Vec eta = linear_predictor(problem, theta);
  Vec w(eta.size());
  bool any = false;
  for (Index i = 0; i < eta.size(); ++i) {
    double xi = eta(i);
    if (problem.family().kind == Family::poisson && xi > kPoissonClamp) {
      xi = kPoissonClamp;
      any = true;
    }
    w(i) = problem.family().variance(xi);
  }
  if (clamped) *clamped = any;
  const Mat& x = problem.x();
  return (x.transpose() * w.asDiagonal() * x) / static_cast<double>(problem.n());
}

double prediction_risk(const GlmProblem& problem, const Vec& theta) {
  if (!problem.mean_truth()) throw std::invalid_argument("prediction_risk: mean_truth absent");
  const Vec eta = linear_predictor(problem, theta);
  const double n = static_cast<double>(problem.n());
  return (-problem.mean_truth()->dot(eta) + cumulant_sum(problem.family(), eta)) / n;
}

double covariance_operator_norm(const Mat& x) {
  const Index n = x.rows(), d = x.cols();
  const bool gram = n < d;
  const Index m = gram ? n : d;
  auto apply = [&](const Vec& v) -> Vec {
    if (gram) return x * (x.transpose() * v) / static_cast<double>(n);
    return x.transpose() * (x * v) / static_cast<double>(n);
  };
  if (x.squaredNorm() == 0.0) return 0.0;
  CounterRng rng(0x5eed, 0);
  Vec v = rng.normal_vector(m);
  v.normalize();
  double rho = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = apply(v);
    const double rho_new = v.dot(w);
    const double resid = (w - rho_new * v).norm();
    const double wn = w.norm();
    if (wn == 0.0) {
      // start vector in the null space; restart deterministically
      v = rng.normal_vector(m).normalized();
      continue;
    }
    if (resid <= 1e-10 * rho_new || std::abs(rho_new - rho) <= 1e-15 * rho_new) return rho_new;
    rho = rho_new;
    v = w / wn;
  }
  throw ConvergenceError("power iteration did not converge in 10000 iterations");
}

SpectralTerms spectral_terms(const Design& design) {
  const Mat& x = design.x();
  const double n = static_cast<double>(design.n());
  SpectralTerms s;
  s.trace = x.squaredNorm() / n;
  const Mat g = design.n() < design.d() ? Mat(x * x.transpose() / n) : Mat(x.transpose() * x / n);
  s.frobenius = g.norm();
  s.op = covariance_operator_norm(x);
  return s;
}

double column_norm_factor(const Design& design) {
  return design.column_norms().maxCoeff() / std::sqrt(static_cast<double>(design.n()));
}

double smoothness_constant(const GlmProblem& problem, SmoothnessGeometry geometry,
                           std::optional<double> radius) {
  const Design& des = problem.design();
  const double n = static_cast<double>(des.n());
  const Family kind = problem.family().kind;
  if (geometry == SmoothnessGeometry::euclidean) {
    const double op = covariance_operator_norm(des.x());
    switch (kind) {
      case Family::gaussian: return op;
      case Family::bernoulli: return op / 4.0;
      case Family::poisson:
        if (!radius) throw std::invalid_argument("smoothness_constant: Poisson euclidean needs a radius");
        if (*radius <= 0) throw std::invalid_argument("smoothness_constant: radius must be positive");
        return op * std::exp(*radius * des.row_norms().maxCoeff());
    }
  } else {
    if (kind == Family::poisson) {
      const Vec w = des.row_max_abs().array().exp();
      const Vec col = (des.x().array().square().colwise() * w.array()).colwise().sum().transpose();
      return col.maxCoeff() / n;
    }
    const double base = des.column_norms().array().square().maxCoeff() / n;
    return kind == Family::bernoulli ? base / 4.0 : base;
  }
  return 0.0;
}

LoadedProblem read_problem_csv(const std::string& path, const std::string& response_column,
                               GlmFamily family, const std::optional<std::string>& mean_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::optional<Vec> theta_true;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_data = true;
  while (std::getline(in, line)) {
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string key = "# theta_true:";
      if (t.rfind(key, 0) == 0) {
        std::istringstream ss(t.substr(key.size()));
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        theta_true = Eigen::Map<Vec>(vals.data(), static_cast<Index>(vals.size()));
      }
      continue;
    }
    auto fields = csv::split_line(t);
    std::vector<double> nums(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j) numeric = numeric && csv::parse_double(fields[j], nums[j]);
    if (first_data && !numeric) {
      header = fields;
      first_data = false;
      continue;
    }
    first_data = false;
    if (!numeric) throw std::runtime_error(path + ": non-numeric data row: " + t);
    if (!rows.empty() && nums.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged row: " + t);
    rows.push_back(std::move(nums));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  const std::size_t ncol = rows.front().size();
  auto resolve = [&](const std::string& col) -> std::size_t {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == col) return j;
    double idx;
    if (csv::parse_double(col, idx) && idx >= 0 && idx == std::floor(idx) && idx < static_cast<double>(ncol))
      return static_cast<std::size_t>(idx);
    throw std::runtime_error(path + ": column not found: " + col);
  };
  const std::size_t ycol = resolve(response_column);
  std::optional<std::size_t> mcol;
  if (mean_column) mcol = resolve(*mean_column);
  std::vector<std::size_t> feat;
  for (std::size_t j = 0; j < ncol; ++j)
    if (j != ycol && (!mcol || j != *mcol)) feat.push_back(j);
  const Index n = static_cast<Index>(rows.size());
  Mat x(n, static_cast<Index>(feat.size()));
  Vec y(n), mu(n);
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < feat.size(); ++k) x(i, static_cast<Index>(k)) = rows[i][feat[k]];
    y(i) = rows[i][ycol];
    if (mcol) mu(i) = rows[i][*mcol];
  }
  std::optional<Vec> mean;
  if (mcol) mean = mu;
  return {GlmProblem(std::move(x), std::move(y), family, std::move(mean)), theta_true};
}

void write_problem_csv(const std::string& path, const GlmProblem& problem,
                       const std::optional<Vec>& theta_true) {
  auto out = csv::open_output(path);
  out << "# family: " << problem.family().name() << "\n";
  if (theta_true) {
    out << "# theta_true:";
    for (Index j = 0; j < theta_true->size(); ++j) out << ' ' << csv::format_double((*theta_true)(j));
    out << "\n";
  }
  for (Index j = 0; j < problem.d(); ++j) out << 'x' << j << ',';
  out << 'y';
  if (problem.mean_truth()) out << ",mu";
  out << "\n";
  for (Index i = 0; i < problem.n(); ++i) {
    for (Index j = 0; j < problem.d(); ++j) out << csv::format_double(problem.x()(i, j)) << ',';
    out << csv::format_double(problem.y()(i));
    if (problem.mean_truth()) out << ',' << csv::format_double((*problem.mean_truth())(i));
    out << "\n";
  }
}

}  // namespace implreg
