#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "trimerlab/error.hpp"
#include "trimerlab/scan.hpp"
#include "trimerlab/twobody.hpp"

using namespace trimerlab;

namespace {

constexpr double kBeta = 0.008, kDelta = -0.07;

// Subcritical-log reduced potential beyond R = 1e4, repulsive inside.
double subcritical_reduced(double R) {
  const double a = kBeta * std::log(R) + kDelta;
  return R > 1e4 ? -std::sqrt(a) : 0.1;
}

ChannelTable synthetic_table(const ModelConfig& cfg, const std::vector<double>& grid,
                             const std::function<double(double)>& W) {
  ChannelTable t;
  t.cfg = cfg;
  t.R = grid;
  t.W.assign(1, {});
  for (double R : grid) t.W[0].push_back(W(R));
  t.U = t.W;
  t.Q.assign(1, std::vector<double>(grid.size(), 0.0));
  t.conv_est = t.Q;
  return t;
}

TableProvider subcritical_provider() {
  return [](const ModelConfig& cfg, const std::vector<double>& grid, int) {
    return synthetic_table(cfg, grid, [](double R) { return subcritical_reduced(R) / (units::two_mu * R * R); });
  };
}

}  // namespace

TEST(Scan, SubcriticalWindowStartsOneDecadeAboveLastSignChange) {
  std::vector<double> R, W;
  for (int i = 0; i <= 8; ++i) {
    R.push_back(std::pow(10.0, i));
    W.push_back(i < 3 ? 1.0 : -1.0);
  }
  const auto w = subcritical_window(R, W);
  ASSERT_TRUE(w.has_value());
  EXPECT_DOUBLE_EQ(w->R_lo, 1e4);
  EXPECT_DOUBLE_EQ(w->R_hi, 1e8);
  W[7] = 1.0;
  EXPECT_FALSE(subcritical_window(R, W).has_value());
  std::fill(W.begin(), W.end(), 1.0);
  EXPECT_FALSE(subcritical_window(R, W).has_value());
}

TEST(Scan, GridDependsOnRegime) {
  const ScanOptions o;
  ModelConfig cfg;
  cfg.alpha2 = 0.0;
  EXPECT_DOUBLE_EQ(scan_grid(cfg, o, std::nullopt).back(), 1e9);
  EXPECT_DOUBLE_EQ(scan_grid(cfg, o, std::nullopt).front(), 100.0);
  cfg.alpha2 = 0.01;
  EXPECT_DOUBLE_EQ(scan_grid(cfg, o, 1e12).back(), 1e10);
  cfg.alpha2 = 0.1;
  const auto g = scan_grid(cfg, o, 1594.0);
  EXPECT_GE(g.back(), 1.594e5);
  EXPECT_LT(g.back(), 1.594e5 * std::pow(10.0, 0.25) * 1.0001);
  cfg.alpha2 = 0.2;
  EXPECT_DOUBLE_EQ(scan_grid(cfg, o, 100.0).back(), 1e5);
}

TEST(Scan, SubcriticalRowUsesFittedTail) {
  ModelConfig cfg;
  ScanOptions o;
  o.n_states = 3;
  const auto rows = spectrum_scan(cfg, {0.0}, o, subcritical_provider());
  ASSERT_EQ(rows.size(), 1u);
  const ScanRow& r = rows[0];
  ASSERT_TRUE(r.error.empty()) << r.error;
  ASSERT_TRUE(r.tail_fit.has_value());
  EXPECT_NEAR(r.tail_fit->param("beta"), kBeta, 1e-9);
  EXPECT_NEAR(r.tail_fit->param("delta"), kDelta, 1e-8);
  ASSERT_EQ(r.states.size(), 3u);

  // Reference: exact tail spliced at the same radius.
  std::vector<double> R, W;
  for (double x : log_grid(100.0, 1e9, 4)) {
    R.push_back(x);
    W.push_back(subcritical_reduced(x) / (units::two_mu * x * x));
  }
  ModelTail tail;
  tail.beta = kBeta;
  tail.delta = kDelta;
  const auto ref = solve_bound_states(PotentialSource::table(R, W).with_tail(tail, *r.R_splice).with_wall(100.0), 3);
  for (int n = 0; n < 3; ++n) {
    EXPECT_NEAR(r.states[n].E, ref.states[n].E, 1e-6 * std::abs(ref.states[n].E));
    EXPECT_EQ(r.states[n].nodes, n);
  }
}

TEST(Scan, ThresholdRowRecoversEffectiveStrength) {
  ModelConfig cfg;
  cfg.alpha2 = 0.1;
  const double E00 = lowest_dimer(cfg)->E;
  const double a2 = 0.683;
  const TableProvider provider = [&](const ModelConfig& c, const std::vector<double>& grid, int) {
    return synthetic_table(c, grid, [&](double R) { return E00 - (a2 + 0.25) / (units::two_mu * R * R); });
  };
  const auto rows = spectrum_scan(ModelConfig{}, {0.1}, {}, provider);
  const ScanRow& r = rows.at(0);
  ASSERT_TRUE(r.error.empty()) << r.error;
  EXPECT_DOUBLE_EQ(*r.E00, E00);
  EXPECT_NEAR(r.tail_fit->param("alpha_eff2"), a2, 1e-9);
  ASSERT_EQ(r.states.size(), 4u);
  const double ratio = std::exp(-2 * std::numbers::pi / std::sqrt(a2));
  for (const auto& s : r.states) {
    EXPECT_LT(s.E, E00);
    EXPECT_NEAR(s.E - E00, s.E_rel, 1e-12 * std::abs(s.E));
  }
  EXPECT_NEAR(r.states[3].E_rel / r.states[2].E_rel, ratio, 0.05 * ratio);
}

TEST(Scan, FreeCaseHasNoStatesAndFailuresAreRecorded) {
  TableProvider provider = [](const ModelConfig& cfg, const std::vector<double>& grid, int) {
    if (cfg.alpha2 == -0.1) throw ConvergenceError("synthetic failure");
    return synthetic_table(cfg, grid, [](double R) { return 3.75 / (units::two_mu * R * R); });
  };
  const auto rows = spectrum_scan(ModelConfig{}, {-0.25, -0.1, -0.05}, {}, provider);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_TRUE(rows[0].states.empty());
  EXPECT_EQ(rows[1].error, "synthetic failure");
  EXPECT_TRUE(rows[2].error.empty());

  std::ostringstream os;
  write_csv(os, rows);
  EXPECT_EQ(os.str(),
            "alpha2,n,E,E_rel,E00,R_mean,nodes,truncated,status\n"
            "-0.25,,,,,,,0,no-states\n"
            "-0.1,,,,,,,0,error: synthetic failure\n"
            "-0.05,,,,,,,0,no-states\n");
  const auto j = to_json(rows);
  EXPECT_EQ(j[1]["error"], "synthetic failure");
  EXPECT_TRUE(j[0]["error"].is_null());
}

TEST(Scan, RejectsUnsortedList) {
  EXPECT_THROW(spectrum_scan(ModelConfig{}, {0.1, 0.0}, {}, subcritical_provider()), InvalidInput);
}
