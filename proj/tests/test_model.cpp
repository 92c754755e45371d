#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "trimerlab/error.hpp"
#include "trimerlab/model.hpp"

using namespace trimerlab;

TEST(Model, ValidateRejectsBadInput) {
  ModelConfig c;
  c.alpha2 = -0.3;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.alpha2 = 0.0;
  c.r0 = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c.r0 = 1.0;
  c.sector = SymmetrySector{Statistics::Boson, 1, -1};
  EXPECT_THROW(c.validate(), InvalidInput);
  c.sector = SymmetrySector{Statistics::Fermion, 1, +1};
  EXPECT_NO_THROW(c.validate());
}

TEST(Model, PairPotentialMatchesClosedForm) {
  const double r0 = 0.7;
  for (CutoffForm f : {CutoffForm::Sech2, CutoffForm::Gaussian, CutoffForm::Constant}) {
    ModelConfig c;
    c.alpha2 = 0.3;
    c.r0 = r0;
    c.cutoff = f;
    for (double r : {1e-3, 0.1, 0.7, 2.0, 50.0}) {
      const double x = r / r0;
      double S = 1.0;
      if (f == CutoffForm::Sech2) S = 1.0 / (std::cosh(x) * std::cosh(x));
      if (f == CutoffForm::Gaussian) S = std::exp(-x * x);
      const double expected = -(0.3 + 0.25) / (r0 * r0 * S + r * r);
      EXPECT_NEAR(pair_potential(r, c), expected, 1e-14 * std::abs(expected));
    }
  }
}

TEST(Model, PurePotentialIsSingularAtOrigin) {
  ModelConfig c;
  c.cutoff = CutoffForm::None;
  EXPECT_THROW(pair_potential(0.0, c), SingularInput);
  EXPECT_NEAR(pair_potential(2.0, c), -0.25 / 4.0, 1e-16);
}

TEST(Model, RegularizedPotentialIsFiniteAndBelowPureForm) {
  for (CutoffForm f : {CutoffForm::Sech2, CutoffForm::Gaussian, CutoffForm::Constant}) {
    ModelConfig c;
    c.alpha2 = 1.0;
    c.cutoff = f;
    ModelConfig pure = c;
    pure.cutoff = CutoffForm::None;
    EXPECT_TRUE(std::isfinite(pair_potential(0.0, c)));
    for (double r : {0.01, 0.5, 3.0}) EXPECT_GT(pair_potential(r, c), pair_potential(r, pure));
  }
}

TEST(Model, PairDistancesSatisfyHyperradiusIdentity) {
  // For equal masses with mu = m / sqrt(3): sum of squared pair distances = sqrt(3) R^2.
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> th(0.0, std::numbers::pi / 2), ph(0.0, 2 * std::numbers::pi);
  for (int i = 0; i < 200; ++i) {
    HyperangularPoint p{3.5, th(gen), ph(gen)};
    const auto r = pair_distances(p);
    const double s = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    EXPECT_NEAR(s, std::sqrt(3.0) * p.R * p.R, 1e-12 * s);
  }
}

TEST(Model, CoincidenceLineGivesZeroPairDistance) {
  // theta = pi/2, phi = pi: particles of pair 0 coincide.
  HyperangularPoint p{1.0, std::numbers::pi / 2, std::numbers::pi};
  EXPECT_NEAR(pair_distances(p)[0], 0.0, 1e-7);
  const auto t = shape_factors(0.0, std::numbers::pi);
  EXPECT_NEAR(t[0], 0.0, 1e-15);
  EXPECT_NEAR(t[1], 1.5, 1e-15);
}

TEST(Model, ReducedPotentialDependsOnRatioOnly) {
  ModelConfig a;
  a.alpha2 = 0.2;
  ModelConfig b = a;
  b.r0 = 3.0;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> th(0.0, std::numbers::pi / 2), ph(0.0, 2 * std::numbers::pi);
  for (int i = 0; i < 50; ++i) {
    const double theta = th(gen), phi = ph(gen);
    const double va = total_potential({10.0, theta, phi}, a);
    const double vb = total_potential({30.0, theta, phi}, b);
    EXPECT_NEAR(va, 9.0 * vb, 1e-12 * std::abs(va));
    const auto t = shape_factors(std::numbers::pi / 2 - theta, phi);
    const double reduced = reduced_total_potential(t, 10.0, a);
    EXPECT_NEAR(reduced, units::two_mu * 100.0 * va, 1e-10 * std::abs(reduced));
  }
}

TEST(Model, JsonRoundTrip) {
  ModelConfig c;
  c.alpha2 = -0.004;
  c.r0 = 0.3;
  c.cutoff = CutoffForm::Gaussian;
  c.sector = SymmetrySector{Statistics::Fermion, 1, +1};
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<ModelConfig>(), c);
  EXPECT_EQ(cutoff_from_string(to_string(CutoffForm::Constant)), CutoffForm::Constant);
  EXPECT_THROW(cutoff_from_string("square"), InvalidInput);
}
