#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "trimerlab/error.hpp"
#include "trimerlab/twobody.hpp"

using namespace trimerlab;

namespace {

// -g'' + [(l + 1/2)^2 + r^2 v(r)] g = E r^2 g with r = e^x (r0 = 1).
double oracle_level(const ModelConfig& cfg, int l, int n, double x_min, double x_max) {
  auto c = [&](double x) {
    const double r = std::exp(x);
    return (l + 0.5) * (l + 0.5) + r * r * pair_potential(r, cfg);
  };
  return oracle::fd_level(c, 1.0, x_min, x_max, 0.004, n);
}

}  // namespace

TEST(TwoBody, LowestLevelsMatchFiniteDifferenceOracle) {
  ModelConfig cfg;
  cfg.alpha2 = 1.0;
  const auto lv = solve_two_body(cfg, 0, 3);
  for (int n = 0; n < 3; ++n) {
    const double E = lv.levels[n].E;
    const double x_max = std::log(40.0 / std::sqrt(-E));
    const double ref = oracle_level(cfg, 0, n, std::log(1e-6), x_max);
    EXPECT_NEAR(E, ref, 1e-7 * std::abs(ref)) << "level " << n;
  }
}

TEST(TwoBody, PWaveLevelMatchesOracle) {
  ModelConfig cfg;
  cfg.alpha2 = 6.0;
  cfg.cutoff = CutoffForm::Gaussian;
  const auto lv = solve_two_body(cfg, 1, 1);
  const double E = lv.levels[0].E;
  const double ref = oracle_level(cfg, 1, 0, std::log(1e-6), std::log(40.0 / std::sqrt(-E)));
  EXPECT_NEAR(E, ref, 1e-7 * std::abs(ref));
}

TEST(TwoBody, SupercriticalLadderIsGeometric) {
  ModelConfig cfg;
  cfg.alpha2 = 1.0;
  const auto lv = solve_two_body(cfg, 0, 7);
  const double e_ratio = std::exp(-2 * std::numbers::pi);
  const double r_ratio = std::exp(std::numbers::pi);
  for (int n = 3; n < 6; ++n) {
    EXPECT_NEAR(lv.levels[n + 1].E / lv.levels[n].E, e_ratio, 0.01 * e_ratio);
    EXPECT_NEAR(lv.levels[n + 1].r_mean / lv.levels[n].r_mean, r_ratio, 0.02 * r_ratio);
  }
}

TEST(TwoBody, NodeCountsEqualLevelIndex) {
  ModelConfig cfg;
  cfg.alpha2 = 2.0;
  cfg.cutoff = CutoffForm::Constant;
  const auto lv = solve_two_body(cfg, 0, 6);
  for (std::size_t v = 0; v < lv.levels.size(); ++v) {
    EXPECT_EQ(lv.levels[v].nodes, static_cast<int>(v));
    if (v > 0) EXPECT_GT(lv.levels[v].E, lv.levels[v - 1].E);
  }
}

TEST(TwoBody, ScalesExactlyWithR0) {
  ModelConfig a;
  a.alpha2 = 0.5;
  ModelConfig b = a;
  b.r0 = 4.0;
  const auto la = solve_two_body(a, 0, 3);
  const auto lb = solve_two_body(b, 0, 3);
  for (int n = 0; n < 3; ++n) {
    EXPECT_NEAR(lb.levels[n].E * 16.0, la.levels[n].E, 1e-12 * std::abs(la.levels[n].E));
    EXPECT_NEAR(lb.levels[n].r_mean / 4.0, la.levels[n].r_mean, 1e-12 * la.levels[n].r_mean);
  }
}

TEST(TwoBody, SubcriticalBindsNothing) {
  ModelConfig cfg;
  cfg.alpha2 = -0.1;
  EXPECT_TRUE(solve_two_body(cfg, 0, 2).levels.empty());
  EXPECT_FALSE(lowest_dimer(cfg).has_value());
  EXPECT_EQ(lowest_threshold(cfg), 0.0);
  cfg.alpha2 = 1.5;
  EXPECT_TRUE(solve_two_body(cfg, 1, 1).levels.empty());
}

TEST(TwoBody, PureFormIsRejected) {
  ModelConfig cfg;
  cfg.alpha2 = 1.0;
  cfg.cutoff = CutoffForm::None;
  EXPECT_THROW(solve_two_body(cfg, 0, 1), PreconditionError);
}

TEST(TwoBody, SmallDomainRaisesDomainError) {
  ModelConfig cfg;
  cfg.alpha2 = 1.0;
  EXPECT_THROW(solve_two_body(cfg, 0, 6, RadialDomain{1e-6, 10.0}), DomainError);
}

TEST(TwoBody, WeakDimerFollowsEfimovScaling) {
  // Near threshold ln|E_0| is close to linear in 1/alpha with slope -2 pi.
  ModelConfig a, b;
  a.alpha2 = 0.1;
  b.alpha2 = 0.05;
  const double Ea = lowest_dimer(a)->E, Eb = lowest_dimer(b)->E;
  const double slope = (std::log(-Eb) - std::log(-Ea)) / (1 / std::sqrt(0.05) - 1 / std::sqrt(0.1));
  EXPECT_NEAR(slope, -2 * std::numbers::pi, 0.05 * 2 * std::numbers::pi);
}

TEST(TwoBody, CsvHasOneRowPerLevel) {
  ModelConfig cfg;
  cfg.alpha2 = 1.0;
  const auto lv = solve_two_body(cfg, 0, 2);
  std::ostringstream os;
  write_csv(os, lv);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "v,l,E,r_mean,nodes");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(sidecar(lv).at("levels"), 2);
}
