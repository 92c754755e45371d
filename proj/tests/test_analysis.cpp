#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "trimerlab/analysis.hpp"
#include "trimerlab/error.hpp"

using namespace trimerlab;

namespace {

constexpr double pi = std::numbers::pi;

struct Samples {
  std::vector<double> R, W;
};

Samples log_samples(double lo, double hi, int per_decade, const std::function<double(double)>& reduced) {
  Samples s;
  const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
  for (int i = 0; i <= n; ++i) {
    const double R = lo * std::pow(10.0, static_cast<double>(i) / per_decade);
    s.R.push_back(R);
    s.W.push_back(reduced(R) / (units::two_mu * R * R));
  }
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Analysis, SubcriticalFitRecoversExactParameters) {
  const double beta = 0.0082, delta = -0.0764, r0 = 1.0;
  const auto s = log_samples(1e5, 1e9, 10, [&](double R) { return -std::sqrt(beta * std::log(R / r0) + delta); });
  const TailFit f = fit_subcritical_tail(s.R, s.W, {1e5, 1e9}, r0);
  EXPECT_LT(rel(f.param("beta"), beta), 1e-10);
  EXPECT_LT(rel(f.param("delta"), delta), 1e-10);
  EXPECT_GT(f.r_squared, 1.0 - 1e-12);
  EXPECT_EQ(f.n_points, 41);
  EXPECT_EQ(f.form, "subcritical-log");
}

TEST(Analysis, SubcriticalFitIsInvariantUnderLengthRescaling) {
  const double beta = 0.0075, delta = -0.06;
  std::mt19937_64 gen(11);
  std::normal_distribution<double> noise(0.0, 1e-3);
  auto s = log_samples(1e4, 1e8, 8, [&](double R) { return -std::sqrt(beta * std::log(R) + delta) * (1 + noise(gen)); });
  const TailFit a = fit_subcritical_tail(s.R, s.W, {1e4, 1e8}, 1.0);
  const double k = 7.0;
  for (std::size_t i = 0; i < s.R.size(); ++i) {
    s.R[i] *= k;
    s.W[i] /= k * k;
  }
  const TailFit b = fit_subcritical_tail(s.R, s.W, {k * 1e4, k * 1e8}, k);
  EXPECT_LT(rel(b.param("beta"), a.param("beta")), 1e-9);
  EXPECT_LT(rel(b.param("delta"), a.param("delta")), 1e-9);
  EXPECT_LT(rel(b.sigma("beta"), a.sigma("beta")), 1e-6);
}

TEST(Analysis, SubcriticalFitRejectsPositiveW) {
  auto s = log_samples(1e2, 1e6, 4, [](double R) { return -std::sqrt(0.008 * std::log(R) - 0.07); });
  for (double& w : s.W)
    if (!(w < 0)) w = 1e-20;
  EXPECT_THROW(fit_subcritical_tail(s.R, s.W, {1e2, 1e6}, 1.0), FitError);
  EXPECT_THROW(fit_subcritical_tail(s.R, s.W, {1e5, 1.5e5}, 1.0), FitError);
}

TEST(Analysis, ThresholdFitsRecoverExactParameters) {
  const double E_th = -1.7e-7, a2 = 0.683;
  const auto s = log_samples(1e4, 1e5, 10, [&](double R) { return units::two_mu * R * R * E_th - (a2 + 0.25); });
  const TailFit f = fit_threshold_tail(s.R, s.W, E_th, {1e4, 1e5});
  EXPECT_LT(rel(f.param("alpha_eff2"), a2), 1e-9);
  const TailFit g = fit_threshold_free(s.R, s.W, {1e4, 1e5});
  EXPECT_LT(rel(g.param("E_th"), E_th), 1e-8);
  EXPECT_LT(rel(g.param("alpha_eff2"), a2), 1e-7);
  EXPECT_THROW(fit_threshold_tail(s.R, s.W, 0.0, {1e4, 1e5}), PreconditionError);
}

TEST(Analysis, ThresholdFitRejectsWindowContainingTheMinimum) {
  const auto s = log_samples(1e2, 1e5, 10, [](double R) { return std::cos(std::log(R)); });
  EXPECT_THROW(fit_threshold_tail(s.R, s.W, -1e-3, {1e2, 1e5}), FitError);
}

TEST(Analysis, FermionFitRecoversParametersFromNoisyData) {
  // Synthetic 1+ tail on [10, 1e10] r0 at 40 samples per decade with 1% multiplicative noise.
  const double a2 = 5.24, gamma = 4.19;
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  const int trials = 500;
  int within = 0;
  double bias_a = 0.0, bias_g = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto s = log_samples(10.0, 1e10, 40, [&](double R) {
      return -(a2 + 0.25 + gamma / std::log(R)) * (1.0 + noise(gen));
    });
    const TailFit f = fit_fermion_tail(s.R, s.W, {10.0, 1e10}, 1.0);
    const double ea = f.param("alpha_eff2") / a2 - 1.0, eg = f.param("gamma") / gamma - 1.0;
    if (std::abs(ea) < 0.03 && std::abs(eg) < 0.03) ++within;
    bias_a += ea / trials;
    bias_g += eg / trials;
  }
  EXPECT_GE(within, 0.99 * trials);
  EXPECT_LT(std::abs(bias_a), 0.002);
  EXPECT_LT(std::abs(bias_g), 0.005);
}

TEST(Analysis, FermionFitIsExactWithoutNoise) {
  const auto s = log_samples(10.0, 1e10, 10, [](double R) { return -(5.49 + 4.19 / std::log(R)); });
  const TailFit f = fit_fermion_tail(s.R, s.W, {10.0, 1e10}, 1.0);
  EXPECT_LT(rel(f.param("alpha_eff2"), 5.24), 1e-10);
  EXPECT_LT(rel(f.param("gamma"), 4.19), 1e-10);
}

TEST(Analysis, FermionFitNeedsWindowAboveR0) {
  const auto s = log_samples(0.5, 1e3, 10, [](double) { return -1.0; });
  EXPECT_THROW(fit_fermion_tail(s.R, s.W, {0.5, 1e3}, 1.0), PreconditionError);
}

TEST(Analysis, ExponentialTrendIsExactOnNoiselessData) {
  const double a = 0.004, b = 35.0, c = 0.0012;
  std::vector<double> x, y;
  for (int i = 0; i < 8; ++i) {
    x.push_back(-0.01 + 0.004 * i);
    y.push_back(a * std::exp(b * x.back()) + c);
  }
  const ExpTrend t = fit_exponential(x, y);
  EXPECT_LT(rel(t.a, a), 1e-6);
  EXPECT_LT(rel(t.b, b), 1e-6);
  EXPECT_LT(rel(t.c, c), 1e-6);
}

TEST(Analysis, TrendFitLocatesCriticalStrength) {
  // beta(alpha^2) = a e^{b alpha^2} + c vanishes at ln(-c/a)/b = ln(0.5)/100.
  const double a = 0.01, b = 100.0, c = -0.005;
  std::vector<TrendPoint> pts;
  for (double x : {0.0, -0.002, -0.004, -0.006, 0.002, 0.004}) {
    TrendPoint p;
    p.alpha2 = x;
    p.beta = a * std::exp(b * x) + c;
    p.delta = -(0.05 * std::exp(40.0 * x) + 0.02);
    pts.push_back(p);
  }
  const TrendFit t = fit_parameter_trends(pts);
  ASSERT_TRUE(t.alpha_c2.has_value());
  EXPECT_NEAR(*t.alpha_c2, std::log(0.5) / 100.0, 1e-8);
  EXPECT_LT(rel(t.delta_fit.b, 40.0), 1e-5);
  const nlohmann::json j = t;
  EXPECT_NEAR(j.at("alpha_c2").get<double>(), std::log(0.5) / 100.0, 1e-8);
}

TEST(Analysis, EffectiveStrengthVanishesAtDimerThreshold) {
  for (int l = 0; l < 4; ++l) EXPECT_NEAR(alpha_eff2(alpha_D2(l), l), 0.0, 1e-14);
  EXPECT_NEAR(alpha_eff2(0.5, 0), 1.75, 1e-14);
  EXPECT_NEAR(alpha_D2(0), -5.0 / 32.0, 1e-16);
}

TEST(Analysis, GeometricRatios) {
  const auto a = geometric_ratios(std::sqrt(5.24));
  EXPECT_NEAR(a.energy, 6.42e-2, 2e-3 * 6.42e-2);
  const auto b = geometric_ratios(std::sqrt(1.75));
  EXPECT_NEAR(b.energy, 8.66e-3, 2e-3 * 8.66e-3);
  EXPECT_NEAR(b.radius * b.radius * b.energy, 1.0, 1e-12);
}

TEST(Analysis, SpectrumPredictionFollowsRecursion) {
  const double beta = 0.008, R0 = 3e6, E0 = -1e-14;
  const SpectrumPrediction p = predict_spectrum(beta, R0, E0, 6);
  ASSERT_EQ(p.E.size(), 6u);
  double lnE = std::log(-E0);
  for (int n = 0; n + 1 < 6; ++n) {
    const double A = beta * std::log(R0) - 0.5 * beta * (lnE - std::log(-E0));
    lnE -= 2 * pi / std::sqrt(std::sqrt(A) - 0.25);
    EXPECT_NEAR(std::log(-p.E[n + 1]), lnE, 1e-12 * std::abs(lnE));
    // Deeper states see a stronger effective strength, so the ladder ratios grow toward 1.
    EXPECT_LT(p.ratios[n], 1.0);
    if (n > 0) EXPECT_GT(p.ratios[n], p.ratios[n - 1]);
  }
  EXPECT_FALSE(p.truncated);
  EXPECT_THROW(predict_spectrum(0.001, 10.0, E0, 4), PreconditionError);
  EXPECT_THROW(predict_spectrum(beta, R0, 1.0, 4), InvalidInput);
}

TEST(Analysis, SpectrumPredictionReachesDeepLaddersWithoutUnderflow) {
  const SpectrumPrediction p = predict_spectrum(0.0082, 1e5, -1e-20, 40);
  EXPECT_EQ(p.E.size(), 40u);
  for (double e : p.E) {
    EXPECT_LT(e, 0.0);
  }
}

TEST(Analysis, FermionExponentEqualMasses) {
  // Known l = 1 exponent for M = m.
  EXPECT_NEAR(*fermion_exponent(1.0), 1.7727, 1e-4);
  EXPECT_FALSE(fermion_exponent(14.0).has_value());
}

TEST(Analysis, MassRatioMap) {
  EXPECT_NEAR(mass_ratio_map(2.0), 13.607, 0.01);
  EXPECT_NEAR(mass_ratio_map(1.6), 11.58, 0.05);
  EXPECT_NEAR(critical_mass_ratio(), 13.607, 0.001);
  double prev = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const double a2 = 0.1 * i;
    const double m = mass_ratio_map(a2);
    EXPECT_GT(m, prev);
    EXPECT_NEAR(alpha2_from_mass_ratio(m), a2, 1e-8);
    prev = m;
  }
  EXPECT_THROW(mass_ratio_map(2.5), DomainError);
  EXPECT_THROW(mass_ratio_map(0.0), DomainError);
}

TEST(Analysis, ModelTailFromFit) {
  const auto s = log_samples(1e5, 1e8, 10, [](double R) { return -std::sqrt(0.008 * std::log(R / 2.0) - 0.05); });
  const TailFit f = fit_subcritical_tail(s.R, s.W, {1e5, 1e8}, 2.0);
  const ModelTail t = model_tail(f);
  EXPECT_EQ(t.form, TailForm::SubcriticalLog);
  EXPECT_EQ(t.r0, 2.0);
  EXPECT_NEAR(t.reduced(std::log(1e6)), -std::sqrt(0.008 * std::log(5e5) - 0.05), 1e-10);
}

TEST(Analysis, TailFitJsonRoundTrip) {
  const auto s = log_samples(1e5, 1e8, 10, [](double R) { return -std::sqrt(0.008 * std::log(R) - 0.05); });
  TailFit f = fit_subcritical_tail(s.R, s.W, {1e5, 1e8}, 1.0);
  f.source_hash = "abc";
  const nlohmann::json j = f;
  const TailFit g = j.get<TailFit>();
  EXPECT_EQ(g.form, f.form);
  EXPECT_EQ(g.params, f.params);
  EXPECT_EQ(g.n_points, f.n_points);
  EXPECT_EQ(g.source_hash, "abc");
  EXPECT_EQ(g.window.R_lo, f.window.R_lo);
  EXPECT_LT((g.covariance - f.covariance).cwiseAbs().maxCoeff(), 1e-300 + 1e-15 * f.covariance.cwiseAbs().maxCoeff());
}

TEST(Analysis, FallToCenterStudyRows) {
  ModelConfig cfg;
  cfg.alpha2 = 0.0;
  const auto st = fall_to_center_study(1e3, {0.1, 1.0, 0.3}, cfg);
  ASSERT_EQ(st.rows.size(), 3u);
  EXPECT_EQ(st.rows[0].r0, 1.0);
  EXPECT_EQ(st.rows[2].r0, 0.1);
  for (const auto& r : st.rows) EXPECT_NEAR(r.strength, -units::two_mu * 1e6 * r.W - 0.25, 1e-9);
  EXPECT_TRUE(st.fit.has_value() != !st.fit_error.empty());
}
