#pragma once

// Tail fits, trend fits, spectrum laws and closed-form maps.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "trimerlab/hyperangular.hpp"
#include "trimerlab/hyperradial.hpp"
#include "trimerlab/model.hpp"

namespace trimerlab {

struct FitWindow {
  double R_lo = 0.0;
  double R_hi = 0.0;
};

struct TailFit {
  /// "subcritical-log", "supercritical-threshold" or "fermion-log".
  std::string form;
  /// Named parameters: {beta, delta}, {E_th, alpha_eff2} or {alpha_eff2, gamma}.
  std::vector<std::pair<std::string, double>> params;
  Eigen::MatrixXd covariance;
  FitWindow window;
  int n_points = 0;
  double residual_norm = 0.0;
  /// Regression R^2 of the linearized form.
  double r_squared = 0.0;
  double r0 = 1.0;
  std::string source_hash;

  double param(const std::string& name) const;
  double sigma(const std::string& name) const;
};

void to_json(nlohmann::json& j, const TailFit& f);
void from_json(const nlohmann::json& j, TailFit& f);

/// Fits W = -sqrt(beta ln(R/r0) + delta) hbar^2 / (2 mu R^2). The linear
/// regression of (2 mu R^2 |W|)^2 on ln(R/r0) initializes a damped
/// Gauss-Newton refinement of the nonlinear form.
TailFit fit_subcritical_tail(const std::vector<double>& R, const std::vector<double>& W,
                             FitWindow window, double r0 = 1.0);

/// alpha_eff^2 from (E_th - W) 2 mu R^2 - 1/4 with E_th given (from the two-body solver).
TailFit fit_threshold_tail(const std::vector<double>& R, const std::vector<double>& W, double E_th,
                           FitWindow window);

/// Fits both E_th and alpha_eff^2 of W = E_th - (alpha_eff^2 + 1/4) / (2 mu R^2).
TailFit fit_threshold_free(const std::vector<double>& R, const std::vector<double>& W,
                           FitWindow window);

/// Fits W = -[(alpha_eff^2 + 1/4) + gamma / ln(R/r0)] hbar^2 / (2 mu R^2).
TailFit fit_fermion_tail(const std::vector<double>& R, const std::vector<double>& W,
                         FitWindow window, double r0 = 1.0);

/// Analytic tail described by a fit.
ModelTail model_tail(const TailFit& fit);

/// Three-parameter exponential y = a exp(b x) + c.
struct ExpTrend {
  double a = 0.0, b = 0.0, c = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double residual_norm = 0.0;
  double operator()(double x) const;
};

ExpTrend fit_exponential(const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<double>& sigma = {});

struct TrendPoint {
  double alpha2 = 0.0;
  double beta = 0.0, delta = 0.0;
  double sigma_beta = 0.0, sigma_delta = 0.0;
};

struct TrendFit {
  ExpTrend beta_fit;
  /// Fit of -delta.
  ExpTrend delta_fit;
  /// ln(-c/a)/b of the beta fit; empty when a <= 0 or c >= 0.
  std::optional<double> alpha_c2;
  std::vector<TrendPoint> points;
};

TrendFit fit_parameter_trends(const std::vector<TrendPoint>& points);

void to_json(nlohmann::json& j, const TrendFit& t);

struct SpectrumPrediction {
  double beta = 0.0, R_mean0 = 0.0, E0 = 0.0, r0 = 1.0;
  std::vector<double> E;
  std::vector<double> ratios;
  /// The recursion left its domain (negative radicand) before n_max.
  bool truncated = false;
};

/// Iterates E_{n+1} = E_n exp(-2 pi / [(beta ln(<R>_0/r0) - (beta/2) ln(E_n/E_0))^{1/2} - 1/4]^{1/2}).
SpectrumPrediction predict_spectrum(double beta, double R_mean0, double E0, int n_max,
                                    double r0 = 1.0);

void to_json(nlohmann::json& j, const SpectrumPrediction& p);

/// (8/3) alpha^2 + 5/12 - l(l+1).
double alpha_eff2(double alpha2, int l);
/// Root of alpha_eff2 in alpha^2: 3 l(l+1)/8 - 5/32.
double alpha_D2(int l);

struct GeometricRatios {
  double energy = 0.0;
  double radius = 0.0;
};

/// (e^{-2 pi / a}, e^{pi / a}).
GeometricRatios geometric_ratios(double alpha_eff);

/// Lowest l = 1 exponent s of two identical heavy fermions (mass M) and one
/// light particle (mass m) with resonant zero-range heavy-light interaction.
/// Empty when no real root exists (beyond the critical mass ratio).
std::optional<double> fermion_exponent(double mass_ratio);

/// Mass ratio M/m with 2 - s^2 = alpha^2, for alpha^2 in (0, 2].
double mass_ratio_map(double alpha2);
/// Inverse map: alpha^2 = 2 - s^2(M/m).
double alpha2_from_mass_ratio(double mass_ratio);
/// Mass ratio at which s reaches 0.
double critical_mass_ratio();

struct FallToCenterRow {
  double r0 = 0.0;
  double W = 0.0;
  /// -2 mu R^2 W / hbar^2 - 1/4
  double strength = 0.0;
};

struct FallToCenterStudy {
  double R = 0.0;
  ModelConfig cfg;
  std::vector<FallToCenterRow> rows;
  /// Fit of strength + 1/4 = sqrt(beta ln(R/r0) + delta); empty when undefined.
  std::optional<TailFit> fit;
  std::string fit_error;
  bool strictly_increasing = false;
};

FallToCenterStudy fall_to_center_study(double R, const std::vector<double>& r0_list,
                                       const ModelConfig& cfg, const MeshPolicy& policy = {},
                                       double dlnR = 0.01);

}  // namespace trimerlab
