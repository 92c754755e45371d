#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "trimerlab/error.hpp"
#include "trimerlab/hyperangular.hpp"

using namespace trimerlab;

namespace {

ModelConfig free_config() {
  ModelConfig c;
  c.alpha2 = -0.25;
  return c;
}

ModelConfig config(double alpha2, double r0 = 1.0) {
  ModelConfig c;
  c.alpha2 = alpha2;
  c.r0 = r0;
  return c;
}

}  // namespace

TEST(Hyperangular, FreeSpectrumAnchors) {
  // Lambda^2 eigenvalues K(K + 4) in the symmetric sector: 0, 32.
  for (double R : {10.0, 1e3, 1e5}) {
    const AngularOperator op(make_mesh(MeshPolicy{}, R, CutoffForm::Sech2));
    const auto s = adiabatic_solve(R, free_config(), op, 2);
    EXPECT_NEAR(s.U(0) * units::two_mu * R * R, 3.75, 3.75e-6) << R;
    EXPECT_NEAR(s.U(1) * units::two_mu * R * R, 35.75, 35.75e-6) << R;
  }
}

TEST(Hyperangular, FreeChannelsHaveNoDiagonalCorrection) {
  const double R = 100.0;
  const AngularOperator op(make_mesh(MeshPolicy{}, R, CutoffForm::Sech2));
  const auto dc = diagonal_correction(R, 0.01, free_config(), op, 2);
  EXPECT_LT(std::abs(dc.Q[0]), 1e-10);
  EXPECT_LT(std::abs(dc.Q[1]), 1e-10);
}

TEST(Hyperangular, ReducedSpectrumIsContainedInFullDomainSpectrum) {
  const AngularMesh reduced = make_uniform_mesh(4, 4, 3);
  const AngularMesh full = mirror_to_full_domain(reduced);
  EXPECT_EQ(full.domain, AngularDomain::Full);
  const ModelConfig cfg = config(0.1);
  const double R = 1.5;
  const auto sr = adiabatic_solve(R, cfg, reduced, 3);
  const auto sf = adiabatic_solve(R, cfg, full, 16);
  for (int i = 0; i < 3; ++i) {
    double best = 1e300;
    for (Eigen::Index j = 0; j < sf.lambda.size(); ++j) best = std::min(best, std::abs(sf.lambda[j] - sr.lambda[i]));
    EXPECT_LT(best, 1e-8 * (std::abs(sr.lambda[i]) + 1.0)) << "channel " << i;
  }
}

TEST(Hyperangular, ChannelsAreOrthonormal) {
  const double R = 1e3;
  const AngularOperator op(make_mesh(MeshPolicy{}, R, CutoffForm::Sech2));
  const auto s = adiabatic_solve(R, config(0.0), op, 4);
  const Eigen::MatrixXd G = s.channels.transpose() * (op.mass() * s.channels);
  EXPECT_LT((G - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
  for (int i = 1; i < 4; ++i) EXPECT_GE(s.lambda[i], s.lambda[i - 1]);
}

TEST(Hyperangular, SparseSolverMatchesDenseSolver) {
  const AngularOperator op(make_uniform_mesh(4, 6, 5));
  ASSERT_GT(op.n_dofs(), 400);
  const ModelConfig cfg = config(0.3);
  const double R = 1.0;
  const auto sparse = adiabatic_solve(R, cfg, op, 4);
  const SparseMatrix K = op.stiffness() + op.potential(R, cfg);
  const auto dense = dense_lowest_eigenpairs(K, op.mass(), 4);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(sparse.lambda[i], dense.values[i], 1e-9 * (std::abs(dense.values[i]) + 1.0));
}

TEST(Hyperangular, DiagonalCorrectionConvergesQuadratically) {
  const double R = 300.0;
  const ModelConfig cfg = config(0.0);
  const AngularOperator op(make_mesh(MeshPolicy{}, R, CutoffForm::Sech2));
  const double q1 = diagonal_correction(R, 0.04, cfg, op, 1).Q[0];
  const double q2 = diagonal_correction(R, 0.02, cfg, op, 1).Q[0];
  const double q4 = diagonal_correction(R, 0.01, cfg, op, 1).Q[0];
  EXPECT_GT(q4, 0.0);
  const double ratio = (q1 - q2) / (q2 - q4);
  EXPECT_NEAR(ratio, 4.0, 0.5);
  // The Richardson estimate differs from the default-step value by a small fraction.
  const double extrapolated = q4 + (q4 - q2) / 3.0;
  EXPECT_LT(std::abs(extrapolated - q4), 1e-3 * q4);
}

TEST(Hyperangular, TablesScaleExactlyWithR0) {
  const std::vector<double> grid{10.0, 100.0, 1e3};
  std::vector<double> scaled;
  for (double R : grid) scaled.push_back(3.0 * R);
  const auto a = channel_table(config(0.0, 1.0), grid, 2, MeshPolicy{});
  const auto b = channel_table(config(0.0, 3.0), scaled, 2, MeshPolicy{});
  for (int nu = 0; nu < 2; ++nu)
    for (std::size_t i = 0; i < grid.size(); ++i)
      EXPECT_NEAR(b.W[nu][i] * 9.0, a.W[nu][i], 1e-6 * std::abs(a.W[nu][i]));
}

TEST(Hyperangular, TableIsIndependentOfThreadCount) {
  const auto grid = log_grid(10.0, 1e4, 3);
  ChannelTableOptions one, four;
  four.threads = 4;
  one.block_size = four.block_size = 4;
  const auto a = channel_table(config(0.05), grid, 2, MeshPolicy{}, one);
  const auto b = channel_table(config(0.05), grid, 2, MeshPolicy{}, four);
  EXPECT_EQ(a.W, b.W);
  EXPECT_EQ(a.Q, b.Q);
  EXPECT_EQ(a.conv_est, b.conv_est);
}

TEST(Hyperangular, TableCsvRoundTripsExactly) {
  const auto t = channel_table(config(0.0), log_grid(10.0, 1e3, 2), 2, MeshPolicy{});
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  const auto back = read_channel_table(is, sidecar(t));
  EXPECT_EQ(back.R, t.R);
  EXPECT_EQ(back.U, t.U);
  EXPECT_EQ(back.Q, t.Q);
  EXPECT_EQ(back.W, t.W);
  EXPECT_EQ(back.cfg, t.cfg);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "R,nu,U,Q,W,conv_est");
  for (std::size_t i = 0; i < t.R.size(); ++i)
    for (int nu = 0; nu < 2; ++nu) EXPECT_DOUBLE_EQ(t.W[nu][i], t.U[nu][i] + t.Q[nu][i]);
}

TEST(Hyperangular, MalformedTableIsRejected) {
  const auto t = channel_table(config(0.0), log_grid(10.0, 100.0, 2), 1, MeshPolicy{});
  std::istringstream bad("R,nu,U,Q,W,conv_est\n10,0,1,2,x,0\n");
  EXPECT_THROW(read_channel_table(bad, sidecar(t)), InvalidInput);
}

TEST(Hyperangular, ChannelPotentialIsContinuousInR) {
  const auto t = channel_table(config(0.0), log_grid(10.0, 1e5, 8), 2, MeshPolicy{});
  for (int nu = 0; nu < 2; ++nu) {
    for (std::size_t i = 1; i < t.R.size(); ++i) {
      const double a = t.W[nu][i - 1] * units::two_mu * t.R[i - 1] * t.R[i - 1];
      const double b = t.W[nu][i] * units::two_mu * t.R[i] * t.R[i];
      EXPECT_LT(std::abs(b - a), 0.5) << "nu " << nu << " R " << t.R[i];
    }
  }
}

TEST(Hyperangular, CoarseMeshFailsResolutionCheck) {
  EXPECT_THROW(check_resolution(make_uniform_mesh(2, 2, 2), 1e6, config(0.0), 8), MeshResolutionError);
  EXPECT_NO_THROW(check_resolution(make_mesh(MeshPolicy{}, 1e6, CutoffForm::Sech2), 1e6, config(0.0), 8));
}

TEST(Hyperangular, FermionSectorIsUnsupported) {
  ModelConfig c = config(0.0);
  c.sector = SymmetrySector{Statistics::Fermion, 1, +1};
  const AngularOperator op(make_uniform_mesh(3, 2, 2));
  EXPECT_THROW(adiabatic_solve(10.0, c, op, 1), UnsupportedSector);
}
