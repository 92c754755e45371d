#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "trimerlab/error.hpp"
#include "trimerlab/hyperradial.hpp"

using namespace trimerlab;

namespace {

ModelTail inverse_square(double s0) {
  ModelTail t;
  t.form = TailForm::PureInverseSquare;
  t.alpha_nu2 = s0 * s0;
  return t;
}

// Oracle energy of level n of a walled source:
// -g'' + [1/4 + 2 mu R^2 (W - E_th)] g = 2 mu (E - E_th) R^2 g, R = e^x.
double oracle_energy(const PotentialSource& src, int n, double x_max, double h = 0.002) {
  const double x_min = std::log(*src.wall());
  auto c = [&](double x) { return 0.25 + src.reduced(x); };
  return src.threshold() + oracle::fd_level(c, units::two_mu, x_min, x_max, h, n);
}

BoundStateOptions tight() {
  BoundStateOptions o;
  o.tolerance = 1e-11;
  o.step = 0.002;
  return o;
}

// 2 mu R^2 W of a smooth well on [1, 1e4] (W > 0 near both ends).
double well(double R) {
  const double x = std::log(R);
  return 2.0 - 30.0 * std::exp(-0.5 * (x - 4.0) * (x - 4.0));
}

}  // namespace

TEST(Hyperradial, AnalyticSourceMatchesDenseGridOracle) {
  // s0 = 2 with a wall at R = 1: three states inside about three decades.
  const PotentialSource src = PotentialSource::model(inverse_square(2.0)).with_wall(1.0);
  const auto set = solve_bound_states(src, 3, tight());
  ASSERT_EQ(set.states.size(), 3u);
  for (int n = 0; n < 3; ++n) {
    const double E = set.states[n].E;
    const double x_max = std::log(40.0 / std::sqrt(-units::two_mu * E));
    const double ref = oracle_energy(src, n, x_max);
    EXPECT_NEAR(E, ref, 1e-7 * std::abs(ref)) << "level " << n;
  }
}

TEST(Hyperradial, TabulatedSourceMatchesDenseGridOracle) {
  std::vector<double> R, W;
  for (int i = 0; i <= 160; ++i) {
    R.push_back(std::pow(10.0, i / 40.0));
    W.push_back(well(R.back()) / (units::two_mu * R.back() * R.back()));
  }
  const PotentialSource src = PotentialSource::table(R, W).with_wall(1.0);
  const auto set = solve_bound_states(src, 3, tight());
  ASSERT_GE(set.states.size(), 2u);
  for (std::size_t n = 0; n < set.states.size(); ++n) {
    const double ref = oracle_energy(src, static_cast<int>(n), std::log(1e4), 0.001);
    EXPECT_NEAR(set.states[n].E, ref, 1e-7 * std::abs(ref)) << "level " << n;
  }
}

TEST(Hyperradial, InverseSquareLadderRatios) {
  const PotentialSource src = PotentialSource::model(inverse_square(1.0)).with_wall(1.0);
  const auto set = solve_bound_states(src, 9);
  ASSERT_EQ(set.states.size(), 9u);
  const double ratio = std::exp(-2 * std::numbers::pi);
  for (int n = 4; n + 1 < 9; ++n)
    EXPECT_NEAR(set.states[n + 1].E / set.states[n].E, ratio, 0.01 * ratio) << n;
}

TEST(Hyperradial, ThresholdLadderRatiosApproachGeometricLimit) {
  ModelTail t;
  t.form = TailForm::SupercriticalThreshold;
  t.alpha_eff2 = 1.75;
  t.E_th = -1e-3;
  const PotentialSource src = PotentialSource::model(t).with_wall(1.0);
  const auto set = solve_bound_states(src, 8);
  ASSERT_EQ(set.states.size(), 8u);
  const double a = std::sqrt(1.75);
  const double e_ratio = std::exp(-2 * std::numbers::pi / a), r_ratio = std::exp(std::numbers::pi / a);
  for (int n = 5; n + 1 < 8; ++n) {
    EXPECT_NEAR(set.states[n + 1].E_rel / set.states[n].E_rel, e_ratio, 0.01 * e_ratio);
    EXPECT_NEAR(set.states[n + 1].R_mean / set.states[n].R_mean, r_ratio, 0.02 * r_ratio);
  }
  for (const auto& s : set.states) EXPECT_NEAR(s.E, t.E_th + s.E_rel, 1e-15);
}

TEST(Hyperradial, NodeCountsAreConsecutive) {
  ModelTail t;
  t.form = TailForm::SubcriticalLog;
  t.beta = 0.008;
  t.delta = -0.07;
  const auto set = solve_bound_states(PotentialSource::model(t).with_wall(100.0), 12);
  ASSERT_FALSE(set.states.empty());
  for (std::size_t n = 0; n < set.states.size(); ++n) {
    EXPECT_EQ(set.states[n].nodes, static_cast<int>(n));
    EXPECT_EQ(set.states[n].n, static_cast<int>(n));
    if (n > 0) EXPECT_GT(set.states[n].E, set.states[n - 1].E);
  }
}

TEST(Hyperradial, RaisingTheWallRaisesEveryLevel) {
  const auto lo = solve_bound_states(PotentialSource::model(inverse_square(1.0)).with_wall(1.0), 4);
  const auto hi = solve_bound_states(PotentialSource::model(inverse_square(1.0)).with_wall(2.0), 4);
  for (int n = 0; n < 4; ++n) EXPECT_GT(hi.states[n].E, lo.states[n].E);
}

TEST(Hyperradial, RepulsiveSourceHasNoStates) {
  std::vector<double> R, W;
  for (int i = 0; i <= 40; ++i) {
    R.push_back(std::pow(10.0, i / 10.0));
    W.push_back(1.0 / (R.back() * R.back()));
  }
  const auto set = solve_bound_states(PotentialSource::table(R, W).with_wall(1.0), 3);
  EXPECT_TRUE(set.states.empty());
}

TEST(Hyperradial, TableInterpolationReproducesSamples) {
  std::vector<double> R, W;
  for (int i = 0; i <= 20; ++i) {
    R.push_back(std::pow(10.0, i / 5.0));
    W.push_back(-std::exp(-0.3 * i) / (R.back() * R.back()));
  }
  const PotentialSource src = PotentialSource::table(R, W);
  for (std::size_t i = 0; i < R.size(); ++i) EXPECT_NEAR(src.W(R[i]), W[i], 1e-13 * std::abs(W[i]));
  EXPECT_THROW(src.W(1e5), DomainError);
  EXPECT_THROW(src.W(0.5), DomainError);
}

TEST(Hyperradial, SpliceUsesTailBeyondSpliceRadius) {
  std::vector<double> R, W;
  for (int i = 0; i <= 20; ++i) {
    R.push_back(std::pow(10.0, i / 5.0));
    W.push_back(-1.25 / (units::two_mu * R.back() * R.back()));
  }
  ModelTail t = inverse_square(2.0);
  const PotentialSource src = PotentialSource::table(R, W).with_tail(t, 100.0);
  EXPECT_NEAR(src.reduced(std::log(10.0)), -1.25, 1e-12);
  EXPECT_NEAR(src.reduced(std::log(1e3)), -4.25, 1e-12);
  EXPECT_NEAR(src.reduced(std::log(1e8)), -4.25, 1e-12);
  EXPECT_THROW(PotentialSource::table(R, W).with_tail(t, 1e6), DomainError);
}

TEST(Hyperradial, ThresholdOffsetAppliesToEveryTailForm) {
  ModelTail t;
  t.form = TailForm::SubcriticalLog;
  t.beta = 0.01;
  t.delta = 0.0;
  t.E_th = -1e-9;
  const PotentialSource src = PotentialSource::model(t);
  const double R = 1e6;
  EXPECT_NEAR(src.W(R), -1e-9 - std::sqrt(0.01 * std::log(R)) / (units::two_mu * R * R), 1e-22);
  const nlohmann::json j = t;
  EXPECT_EQ(j.get<ModelTail>().E_th, -1e-9);
}

TEST(Hyperradial, InvalidRequestsAreRejected) {
  const PotentialSource src = PotentialSource::model(inverse_square(1.0)).with_wall(1.0);
  EXPECT_THROW(solve_bound_states(src, 0), InvalidInput);
  EXPECT_THROW(PotentialSource::model(inverse_square(1.0)).with_wall(-1.0), InvalidInput);
  EXPECT_THROW(tail_form_from_string("cubic"), InvalidInput);
}

TEST(Hyperradial, CsvListsStates) {
  const auto set = solve_bound_states(PotentialSource::model(inverse_square(1.0)).with_wall(1.0), 2);
  std::ostringstream os;
  write_csv(os, set);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "n,E,R_mean,nodes,Rin,Rout,truncated");
}
