#include "trimerlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "trimerlab/error.hpp"

namespace trimerlab {

namespace {

using std::numbers::pi;

struct Window {
  std::vector<double> R, W;
};

Window select(const std::vector<double>& R, const std::vector<double>& W, FitWindow w) {
  if (R.size() != W.size()) throw InvalidInput("R and W lengths differ");
  if (!(w.R_lo > 0) || !(w.R_hi > w.R_lo)) throw InvalidInput("invalid fit window");
  Window out;
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (R[i] >= w.R_lo * (1 - 1e-12) && R[i] <= w.R_hi * (1 + 1e-12)) {
      if (!std::isfinite(W[i])) throw FitError("non-finite W inside the fit window");
      out.R.push_back(R[i]);
      out.W.push_back(W[i]);
    }
  }
  return out;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& fit) {
  const double mean = y.mean();
  const double tot = (y.array() - mean).square().sum();
  const double res = (y - fit).squaredNorm();
  return tot > 0 ? 1.0 - res / tot : (res == 0 ? 1.0 : 0.0);
}

struct LinearFit {
  Eigen::VectorXd p;
  Eigen::MatrixXd cov;
  double residual_norm = 0.0;
  double r2 = 0.0;
};

LinearFit linear_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  const auto n = A.rows(), k = A.cols();
  LinearFit f;
  f.p = A.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd fit = A * f.p;
  f.residual_norm = (y - fit).norm();
  f.r2 = r_squared(y, fit);
  const double s2 = n > k ? (y - fit).squaredNorm() / static_cast<double>(n - k) : 0.0;
  f.cov = s2 * (A.transpose() * A).inverse();
  return f;
}

// Residuals sqrt(beta L + delta) - y for the subcritical form.
struct SqrtLogFunctor : Eigen::DenseFunctor<double> {
  Eigen::VectorXd L, y;
  SqrtLogFunctor(Eigen::VectorXd L_, Eigen::VectorXd y_)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(L_.size())), L(std::move(L_)), y(std::move(y_)) {}
  static double root(double a) { return std::sqrt(std::max(a, 1e-300)); }
  int operator()(const InputType& p, ValueType& r) const {
    for (Eigen::Index i = 0; i < L.size(); ++i) r[i] = root(p[0] * L[i] + p[1]) - y[i];
    return 0;
  }
  int df(const InputType& p, JacobianType& J) const {
    for (Eigen::Index i = 0; i < L.size(); ++i) {
      const double s = 2.0 * std::max(root(p[0] * L[i] + p[1]), 1e-8);
      J(i, 0) = L[i] / s;
      J(i, 1) = 1.0 / s;
    }
    return 0;
  }
};

}  // namespace

double TailFit::param(const std::string& name) const {
  for (const auto& [k, v] : params)
    if (k == name) return v;
  throw InvalidInput("fit has no parameter '" + name + "'");
}

double TailFit::sigma(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].first == name) return std::sqrt(std::max(0.0, covariance(i, i)));
  throw InvalidInput("fit has no parameter '" + name + "'");
}

void to_json(nlohmann::json& j, const TailFit& f) {
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : f.params) p[k] = v;
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < f.covariance.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < f.covariance.cols(); ++k) row.push_back(f.covariance(i, k));
    cov.push_back(row);
  }
  nlohmann::json names = nlohmann::json::array();
  for (const auto& kv : f.params) names.push_back(kv.first);
  j = nlohmann::json{{"form", f.form},
                     {"params", p},
                     {"param_order", names},
                     {"covariance", cov},
                     {"window", {f.window.R_lo, f.window.R_hi}},
                     {"n_points", f.n_points},
                     {"residual_norm", f.residual_norm},
                     {"r_squared", f.r_squared},
                     {"r0", f.r0},
                     {"source_hash", f.source_hash}};
}

void from_json(const nlohmann::json& j, TailFit& f) {
  try {
    f.form = j.at("form").get<std::string>();
    f.params.clear();
    const auto& p = j.at("params");
    for (const auto& name : j.at("param_order")) {
      const auto key = name.get<std::string>();
      f.params.emplace_back(key, p.at(key).get<double>());
    }
    const auto& cov = j.at("covariance");
    const auto n = static_cast<Eigen::Index>(cov.size());
    f.covariance = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) f.covariance(i, k) = cov.at(i).at(k).get<double>();
    f.window = {j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>()};
    f.n_points = j.value("n_points", 0);
    f.residual_norm = j.value("residual_norm", 0.0);
    f.r_squared = j.value("r_squared", 0.0);
    f.r0 = j.value("r0", 1.0);
    f.source_hash = j.value("source_hash", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed fit description: ") + e.what());
  }
}

TailFit fit_subcritical_tail(const std::vector<double>& R, const std::vector<double>& W,
                             FitWindow window, double r0) {
  if (!(r0 > 0)) throw InvalidInput("r0 must be positive");
  const Window s = select(R, W, window);
  const auto n = static_cast<Eigen::Index>(s.R.size());
  if (n < 3) throw FitError("fewer than 3 samples in the fit window");
  Eigen::VectorXd L(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(s.W[i] < 0))
      throw FitError("W >= 0 at R = " + std::to_string(s.R[i]) + "; the subcritical form needs W < 0");
    L[i] = std::log(s.R[i] / r0);
    y[i] = -units::two_mu * s.R[i] * s.R[i] * s.W[i];
  }
  Eigen::MatrixXd A(n, 2);
  A.col(0) = L;
  A.col(1).setOnes();
  const LinearFit lin = linear_ls(A, y.array().square().matrix());

  SqrtLogFunctor fn(L, y);
  Eigen::VectorXd p = lin.p;
  Eigen::LevenbergMarquardt<SqrtLogFunctor> lm(fn);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(2000);
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite())
    throw FitError("nonlinear subcritical fit failed");

  Eigen::VectorXd r(n);
  Eigen::MatrixXd J(n, 2);
  fn(p, r);
  fn.df(p, J);
  const double s2 = n > 2 ? r.squaredNorm() / static_cast<double>(n - 2) : 0.0;

  TailFit f;
  f.form = "subcritical-log";
  f.params = {{"beta", p[0]}, {"delta", p[1]}};
  f.covariance = s2 * (J.transpose() * J).inverse();
  f.window = window;
  f.n_points = static_cast<int>(n);
  f.residual_norm = r.norm();
  f.r_squared = lin.r2;
  f.r0 = r0;
  return f;
}

TailFit fit_threshold_tail(const std::vector<double>& R, const std::vector<double>& W, double E_th,
                           FitWindow window) {
  if (!(E_th < 0)) throw PreconditionError("the supercritical threshold must be a bound dimer energy (E_th < 0)");
  const Window s = select(R, W, window);
  const auto n = static_cast<Eigen::Index>(s.R.size());
  if (n < 3) throw FitError("fewer than 3 samples in the fit window");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(s.W[i] > s.W[i - 1]))
      throw FitError("W is not increasing across the window (it contains the minimum or noise)");
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = (E_th - s.W[i]) * units::two_mu * s.R[i] * s.R[i] - 0.25;
  const double a = y.mean();
  const double var = n > 1 ? (y.array() - a).square().sum() / static_cast<double>(n - 1) : 0.0;

  Eigen::VectorXd w(n), fit(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = s.W[i];
    fit[i] = E_th - (a + 0.25) / (units::two_mu * s.R[i] * s.R[i]);
  }
  TailFit f;
  f.form = "supercritical-threshold";
  f.params = {{"E_th", E_th}, {"alpha_eff2", a}};
  f.covariance = Eigen::MatrixXd::Zero(2, 2);
  f.covariance(1, 1) = var / static_cast<double>(n);
  f.window = window;
  f.n_points = static_cast<int>(n);
  f.residual_norm = (y.array() - a).matrix().norm();
  f.r_squared = r_squared(w, fit);
  return f;
}

TailFit fit_threshold_free(const std::vector<double>& R, const std::vector<double>& W,
                           FitWindow window) {
  const Window s = select(R, W, window);
  const auto n = static_cast<Eigen::Index>(s.R.size());
  if (n < 3) throw FitError("fewer than 3 samples in the fit window");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = -1.0 / (units::two_mu * s.R[i] * s.R[i]);
    y[i] = s.W[i];
  }
  const LinearFit lin = linear_ls(A, y);
  TailFit f;
  f.form = "supercritical-threshold";
  f.params = {{"E_th", lin.p[0]}, {"alpha_eff2", lin.p[1] - 0.25}};
  f.covariance = lin.cov;
  f.window = window;
  f.n_points = static_cast<int>(n);
  f.residual_norm = lin.residual_norm;
  f.r_squared = lin.r2;
  return f;
}

TailFit fit_fermion_tail(const std::vector<double>& R, const std::vector<double>& W,
                         FitWindow window, double r0) {
  if (!(r0 > 0)) throw InvalidInput("r0 must be positive");
  if (!(window.R_lo > r0)) throw PreconditionError("the fermion-log window must lie above r0");
  const Window s = select(R, W, window);
  const auto n = static_cast<Eigen::Index>(s.R.size());
  if (n < 3) throw FitError("fewer than 3 samples in the fit window");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = 1.0 / std::log(s.R[i] / r0);
    y[i] = -units::two_mu * s.R[i] * s.R[i] * s.W[i];
  }
  const LinearFit lin = linear_ls(A, y);
  TailFit f;
  f.form = "fermion-log";
  f.params = {{"alpha_eff2", lin.p[0] - 0.25}, {"gamma", lin.p[1]}};
  f.covariance = lin.cov;
  f.window = window;
  f.n_points = static_cast<int>(n);
  f.residual_norm = lin.residual_norm;
  f.r_squared = lin.r2;
  f.r0 = r0;
  return f;
}

double ExpTrend::operator()(double x) const { return a * std::exp(b * x) + c; }

ModelTail model_tail(const TailFit& fit) {
  ModelTail t;
  t.form = tail_form_from_string(fit.form);
  t.r0 = fit.r0;
  switch (t.form) {
    case TailForm::SubcriticalLog:
      t.beta = fit.param("beta");
      t.delta = fit.param("delta");
      break;
    case TailForm::SupercriticalThreshold:
      t.E_th = fit.param("E_th");
      t.alpha_eff2 = fit.param("alpha_eff2");
      break;
    case TailForm::FermionLog:
      t.alpha_eff2 = fit.param("alpha_eff2");
      t.gamma = fit.param("gamma");
      break;
    case TailForm::PureInverseSquare:
      t.alpha_nu2 = fit.param("alpha_nu2");
      break;
  }
  return t;
}

ExpTrend fit_exponential(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& sigma) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 4 || y.size() != x.size()) throw FitError("an exponential trend needs at least 4 points");
  if (!sigma.empty() && sigma.size() != x.size()) throw InvalidInput("sigma length differs");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!sigma.empty() && sigma[i] > 0) w[i] = 1.0 / sigma[i];

  const double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
  if (!(span > 0)) throw FitError("degenerate abscissae");

  // Variable projection: for fixed b the model is linear in (a, c).
  auto project = [&](double b, Eigen::Vector2d* ac) {
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      A(i, 0) = w[i] * std::exp(b * x[i]);
      A(i, 1) = w[i];
      rhs[i] = w[i] * y[i];
    }
    const Eigen::Vector2d p = A.colPivHouseholderQr().solve(rhs);
    if (ac) *ac = p;
    return (A * p - rhs).squaredNorm();
  };

  const double b_max = 200.0 / span;
  const int grid = 400;
  double best_b = 0.0, best = std::numeric_limits<double>::infinity();
  for (int k = -grid; k <= grid; ++k) {
    if (k == 0) continue;
    const double b = b_max * std::sinh(4.0 * k / grid) / std::sinh(4.0);
    const double r = project(b, nullptr);
    if (r < best) {
      best = r;
      best_b = b;
    }
  }
  const double step = std::abs(best_b) * 0.1 + b_max * 1e-4;
  const auto m = boost::math::tools::brent_find_minima(
      [&](double b) { return project(b, nullptr); }, best_b - step, best_b + step, 50);

  ExpTrend t;
  Eigen::Vector2d ac;
  t.b = m.first;
  t.residual_norm = std::sqrt(project(t.b, &ac));
  t.a = ac[0];
  t.c = ac[1];

  Eigen::MatrixXd J(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::exp(t.b * x[i]);
    J(i, 0) = w[i] * e;
    J(i, 1) = w[i] * t.a * x[i] * e;
    J(i, 2) = w[i];
  }
  const double s2 = sigma.empty() && n > 3 ? t.residual_norm * t.residual_norm / static_cast<double>(n - 3) : 1.0;
  t.covariance = s2 * (J.transpose() * J).inverse();
  return t;
}

TrendFit fit_parameter_trends(const std::vector<TrendPoint>& points) {
  std::vector<double> x, beta, mdelta, sb, sd;
  for (const auto& p : points) {
    x.push_back(p.alpha2);
    beta.push_back(p.beta);
    mdelta.push_back(-p.delta);
    sb.push_back(p.sigma_beta);
    sd.push_back(p.sigma_delta);
  }
  const bool weighted = std::all_of(points.begin(), points.end(),
                                    [](const TrendPoint& p) { return p.sigma_beta > 0 && p.sigma_delta > 0; });
  TrendFit t;
  t.points = points;
  t.beta_fit = fit_exponential(x, beta, weighted ? sb : std::vector<double>{});
  t.delta_fit = fit_exponential(x, mdelta, weighted ? sd : std::vector<double>{});
  const auto& f = t.beta_fit;
  if (f.a > 0 && f.c < 0 && f.b != 0) t.alpha_c2 = std::log(-f.c / f.a) / f.b;
  return t;
}

namespace {
nlohmann::json trend_json(const ExpTrend& e) {
  nlohmann::json cov = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) cov.push_back({e.covariance(i, 0), e.covariance(i, 1), e.covariance(i, 2)});
  return {{"a", e.a}, {"b", e.b}, {"c", e.c}, {"covariance", cov}, {"residual_norm", e.residual_norm}};
}
}  // namespace

void to_json(nlohmann::json& j, const TrendFit& t) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : t.points)
    pts.push_back({{"alpha2", p.alpha2}, {"beta", p.beta}, {"delta", p.delta},
                   {"sigma_beta", p.sigma_beta}, {"sigma_delta", p.sigma_delta}});
  j = nlohmann::json{{"model", "a*exp(b*alpha2)+c"},
                     {"beta", trend_json(t.beta_fit)},
                     {"minus_delta", trend_json(t.delta_fit)},
                     {"alpha_c2", t.alpha_c2 ? nlohmann::json(*t.alpha_c2) : nlohmann::json(nullptr)},
                     {"points", pts}};
}

SpectrumPrediction predict_spectrum(double beta, double R_mean0, double E0, int n_max, double r0) {
  if (n_max < 1) throw InvalidInput("n_max must be >= 1");
  if (!(E0 < 0)) throw InvalidInput("E0 must be negative");
  if (!(R_mean0 > 0) || !(r0 > 0) || !(beta > 0)) throw InvalidInput("beta, <R>_0 and r0 must be positive");
  const double A0 = beta * std::log(R_mean0 / r0);
  if (!(A0 > 1.0 / 16.0)) throw PreconditionError("beta ln(<R>_0/r0) must exceed 1/16");
  SpectrumPrediction p{beta, R_mean0, E0, r0, {E0}, {}, false};
  // Work with ln|E| so deep ladders do not underflow.
  double lnE = std::log(-E0);
  const double lnE0 = lnE;
  while (static_cast<int>(p.E.size()) < n_max) {
    const double A = A0 - 0.5 * beta * (lnE - lnE0);
    const double inner = A > 0 ? std::sqrt(A) - 0.25 : -1.0;
    if (!(inner > 0)) {
      p.truncated = true;
      break;
    }
    const double step = -2.0 * pi / std::sqrt(inner);
    lnE += step;
    p.E.push_back(-std::exp(lnE));
    p.ratios.push_back(std::exp(step));
  }
  return p;
}

void to_json(nlohmann::json& j, const SpectrumPrediction& p) {
  j = nlohmann::json{{"beta", p.beta}, {"R_mean0", p.R_mean0}, {"E0", p.E0}, {"r0", p.r0},
                     {"E", p.E}, {"ratios", p.ratios}, {"truncated", p.truncated}};
}

double alpha_eff2(double alpha2, int l) {
  if (l < 0) throw InvalidInput("l must be non-negative");
  return 8.0 / 3.0 * alpha2 + 5.0 / 12.0 - l * (l + 1.0);
}

double alpha_D2(int l) {
  if (l < 0) throw InvalidInput("l must be non-negative");
  return 3.0 * l * (l + 1.0) / 8.0 - 5.0 / 32.0;
}

GeometricRatios geometric_ratios(double alpha_eff) {
  if (!(alpha_eff > 0)) throw InvalidInput("alpha_eff must be positive");
  return {std::exp(-2.0 * pi / alpha_eff), std::exp(pi / alpha_eff)};
}

namespace {

// Exponent function divided by its trivial roots s = 0 and s = 1:
//   [(s^2-1) sin(pi s/2) + (2/sin 2w)(s cos(s w) - cot w sin(s w))] / (s (s - 1)).
double exponent_function(double s, double omega) {
  auto num = [omega](double t) {
    return (t * t - 1.0) * std::sin(pi * t / 2.0) +
           2.0 / std::sin(2.0 * omega) * (t * std::cos(t * omega) - std::sin(t * omega) / std::tan(omega));
  };
  auto g = [&](double t) { return num(t) / (t * (t - 1.0)); };
  constexpr double eps = 1e-5;
  // Linear interpolation across the removable points keeps g continuous and monotone there.
  if (std::abs(s - 1.0) < eps) {
    const double a = g(1.0 - eps), b = g(1.0 + eps);
    return a + (s - 1.0 + eps) * (b - a) / (2.0 * eps);
  }
  if (s < eps) {
    const double g0 = pi / 2.0 - 2.0 / std::sin(2.0 * omega) * (1.0 - omega / std::tan(omega));
    return g0 + s * (g(eps) - g0) / eps;
  }
  return g(s);
}

double omega_of(double mass_ratio) { return std::asin(mass_ratio / (1.0 + mass_ratio)); }

}  // namespace

std::optional<double> fermion_exponent(double mass_ratio) {
  if (!(mass_ratio > 0)) throw InvalidInput("mass ratio must be positive");
  const double omega = omega_of(mass_ratio);
  const double h = 1e-3;
  double s0 = 0.0, g0 = exponent_function(0.0, omega);
  for (double s1 = h; s1 <= 3.0 + 1e-12; s1 += h) {
    const double g1 = exponent_function(s1, omega);
    if (g0 == 0) return s0;
    if ((g0 < 0) != (g1 < 0)) {
      boost::math::tools::eps_tolerance<double> tol(50);
      std::uintmax_t it = 200;
      const auto r = boost::math::tools::toms748_solve(
          [omega](double s) { return exponent_function(s, omega); }, s0, s1, g0, g1, tol, it);
      return 0.5 * (r.first + r.second);
    }
    s0 = s1;
    g0 = g1;
  }
  return std::nullopt;
}

double critical_mass_ratio() {
  auto f = [](double m) { return exponent_function(0.0, omega_of(m)); };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(f, 8.0, 20.0, tol, it);
  return 0.5 * (r.first + r.second);
}

double alpha2_from_mass_ratio(double mass_ratio) {
  const auto s = fermion_exponent(mass_ratio);
  if (!s) throw DomainError("no real exponent beyond the critical mass ratio");
  return 2.0 - *s * *s;
}

double mass_ratio_map(double alpha2) {
  if (!(alpha2 > 0 && alpha2 <= 2.0)) throw DomainError("mass-ratio map is defined for alpha^2 in (0, 2]");
  const double mc = critical_mass_ratio();
  if (alpha2 == 2.0) return mc;
  const double s = std::sqrt(2.0 - alpha2);
  auto f = [&](double m) {
    const auto e = fermion_exponent(m);
    return (e ? *e : 0.0) - s;
  };
  boost::math::tools::eps_tolerance<double> tol(45);
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(f, 1.0, mc, tol, it);
  return 0.5 * (r.first + r.second);
}

FallToCenterStudy fall_to_center_study(double R, const std::vector<double>& r0_list,
                                       const ModelConfig& cfg, const MeshPolicy& policy, double dlnR) {
  if (!(R > 0)) throw InvalidInput("R must be positive");
  if (r0_list.size() < 3) throw InvalidInput("at least 3 cutoff radii are needed");
  FallToCenterStudy st;
  st.R = R;
  st.cfg = cfg;
  for (double r0 : r0_list) {
    ModelConfig c = cfg;
    c.r0 = r0;
    c.validate();
    const AngularOperator op(make_mesh(policy, R / r0, c.cutoff));
    const DiagonalCorrection dc = diagonal_correction(R, dlnR, c, op, 1);
    FallToCenterRow row;
    row.r0 = r0;
    row.W = dc.center.U(0) + dc.Q[0];
    row.strength = -units::two_mu * R * R * row.W - 0.25;
    st.rows.push_back(row);
  }
  std::sort(st.rows.begin(), st.rows.end(), [](const auto& a, const auto& b) { return a.r0 > b.r0; });
  st.strictly_increasing = true;
  for (std::size_t i = 1; i < st.rows.size(); ++i)
    if (!(st.rows[i].strength > st.rows[i - 1].strength)) st.strictly_increasing = false;

  // strength + 1/4 = -2 mu R^2 W = sqrt(beta ln(R/r0) + delta): the subcritical form in r0 at fixed R.
  std::vector<double> ratio, W;
  for (auto it = st.rows.begin(); it != st.rows.end(); ++it) {
    ratio.push_back(R / it->r0);
    W.push_back(it->W * R * R / (ratio.back() * ratio.back()));
  }
  try {
    st.fit = fit_subcritical_tail(ratio, W, {ratio.front(), ratio.back()}, 1.0);
  } catch (const FitError& e) {
    st.fit_error = e.what();
  }
  return st;
}

}  // namespace trimerlab
