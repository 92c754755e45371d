#include "trimerlab/eigensolver.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <random>

#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>

#include "trimerlab/error.hpp"

namespace trimerlab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cholesky below the spectrum; LDL^T with an inertia count once pairs are locked.
class ShiftedFactor {
 public:
  /// Factors K - sigma M. With `expected_negative` = 0 success means positive
  /// definite; otherwise the number of negative pivots must match exactly.
  bool compute(const SparseMatrix& K, const SparseMatrix& M, double sigma, int expected_negative) {
    const SparseMatrix A = K - sigma * M;
    indefinite_ = expected_negative > 0;
    if (!indefinite_) {
      llt_.cholmod().print = 0;
      llt_.compute(A);
      return llt_.info() == Eigen::Success;
    }
    ldlt_.compute(A);
    if (ldlt_.info() != Eigen::Success) return false;
    const auto& d = ldlt_.vectorD();
    int negative = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d[i] == 0.0) return false;
      if (d[i] < 0) ++negative;
    }
    return negative == expected_negative;
  }
  VectorXd solve(const VectorXd& b) const { return indefinite_ ? VectorXd(ldlt_.solve(b)) : VectorXd(llt_.solve(b)); }

 private:
  Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt_;
  bool indefinite_ = false;
};

VectorXd random_vector(Eigen::Index n, std::mt19937_64& gen) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
  return v;
}

Eigen::VectorXd explicit_residuals(const SparseMatrix& K, const SparseMatrix& M,
                                   const VectorXd& values, const MatrixXd& vectors) {
  VectorXd res(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const VectorXd kx = K * vectors.col(i);
    const VectorXd mx = M * vectors.col(i);
    const double scale = kx.norm() + std::abs(values[i]) * mx.norm();
    res[i] = (kx - values[i] * mx).norm() / (scale > 0 ? scale : 1.0);
  }
  return res;
}

struct LanczosRun {
  int steps = 0;
  VectorXd ritz_values;  // lambda estimates, ascending
  MatrixXd ritz_vectors;
  std::vector<bool> converged;
  std::vector<double> bounds;  // eigenvalue error bound / (|lambda| + 1)
  int leading_converged() const {
    int k = 0;
    while (k < static_cast<int>(converged.size()) && converged[k]) ++k;
    return k;
  }
};

// Removes the M-components along the locked vectors Y (MY = M Y).
void deflate(VectorXd& w, VectorXd& Mw, const MatrixXd& Y, const MatrixXd& MY) {
  if (Y.cols() == 0) return;
  const VectorXd c = Y.transpose() * Mw;
  w.noalias() -= Y * c;
  Mw.noalias() -= MY * c;
}

// Shift-invert Lanczos on (K - sigma M)^{-1} M in the M inner product,
// restricted to the M-orthogonal complement of Y.
LanczosRun run_lanczos(const ShiftedFactor& factor, const SparseMatrix& M, const MatrixXd& Y,
                       const MatrixXd& MY, double sigma, int count, VectorXd start, int budget,
                       const LanczosOptions& opt, std::mt19937_64& gen) {
  const Eigen::Index n = M.rows();
  const int mcap = static_cast<int>(std::min<Eigen::Index>(budget, n - Y.cols()));
  MatrixXd Q(n, mcap + 1), MQ(n, mcap + 1);
  std::vector<double> alpha, beta;

  VectorXd Mv = M * start;
  deflate(start, Mv, Y, MY);
  double nrm = std::sqrt(start.dot(Mv));
  Q.col(0) = start / nrm;
  MQ.col(0) = Mv / nrm;

  LanczosRun run;
  for (int j = 0; j < mcap; ++j) {
    VectorXd w = factor.solve(MQ.col(j));
    VectorXd Mw = M * w;
    double a = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      deflate(w, Mw, Y, MY);
      const VectorXd c = Q.leftCols(j + 1).transpose() * Mw;
      w.noalias() -= Q.leftCols(j + 1) * c;
      Mw.noalias() -= MQ.leftCols(j + 1) * c;
      a += c[j];
    }
    alpha.push_back(a);
    double b = std::sqrt(std::max(0.0, w.dot(Mw)));
    const double scale = std::abs(a) + (beta.empty() ? 0.0 : beta.back());
    if (b <= 1e-12 * scale) {
      // Invariant subspace: continue from a fresh direction.
      b = 0.0;
      w = random_vector(n, gen);
      Mw = M * w;
      for (int pass = 0; pass < 2; ++pass) {
        deflate(w, Mw, Y, MY);
        const VectorXd c = Q.leftCols(j + 1).transpose() * Mw;
        w.noalias() -= Q.leftCols(j + 1) * c;
        Mw.noalias() -= MQ.leftCols(j + 1) * c;
      }
      const double wn = std::sqrt(std::max(0.0, w.dot(Mw)));
      if (wn == 0.0) {
        run.steps = j + 1;
        break;
      }
      w /= wn;
      Mw /= wn;
      beta.push_back(0.0);
      Q.col(j + 1) = w;
      MQ.col(j + 1) = Mw;
    } else {
      beta.push_back(b);
      Q.col(j + 1) = w / b;
      MQ.col(j + 1) = Mw / b;
    }
    run.steps = j + 1;

    const int m = j + 1;
    const bool check = m >= count && (m % 4 == 0 || m == mcap);
    if (!check) continue;
    MatrixXd T = MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
    const int k = std::min(count, m);
    std::vector<bool> conv(k);
    std::vector<double> bnd(k);
    bool all = true;
    for (int i = 0; i < k; ++i) {
      const int idx = m - 1 - i;  // largest theta first
      const double theta = es.eigenvalues()[idx];
      const double resid = std::abs(beta[m - 1] * es.eigenvectors()(m - 1, idx));
      // resid / theta^2 bounds the error of lambda = sigma + 1/theta; resid / theta
      // controls the vector.
      bnd[i] = theta > 0 ? resid / (theta * theta) / (std::abs(sigma + 1.0 / theta) + 1.0)
                         : std::numeric_limits<double>::infinity();
      conv[i] = theta > 0 && resid <= opt.tolerance * theta * std::min(1.0, theta * (std::abs(sigma + 1.0 / theta) + 1.0));
      all = all && conv[i];
    }
    if (all || m == mcap) {
      run.converged = conv;
      run.bounds = bnd;
      run.ritz_values.resize(k);
      run.ritz_vectors.resize(n, k);
      for (int i = 0; i < k; ++i) {
        const int idx = m - 1 - i;
        run.ritz_values[i] = sigma + 1.0 / es.eigenvalues()[idx];
        VectorXd x = Q.leftCols(m) * es.eigenvectors().col(idx);
        const double xn = std::sqrt(x.dot(M * x));
        run.ritz_vectors.col(i) = x / xn;
      }
      return run;
    }
  }
  return run;
}

}  // namespace

EigenResult lowest_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int count,
                              double lower_bound, std::optional<double> estimate,
                              const LanczosOptions& options) {
  if (count < 1) throw InvalidInput("eigenpair count must be positive");
  if (K.rows() <= 400) return dense_lowest_eigenpairs(K, M, count);

  std::mt19937_64 gen(options.seed);
  ShiftedFactor factor;
  EigenResult out;
  const Eigen::Index n = K.rows();
  MatrixXd Y(n, 0), MY(n, 0);
  std::vector<double> locked, bounds;

  // Place a certified shift below the spectrum.
  double sigma = lower_bound - 1.0;
  bool have_factor = false;
  if (estimate) {
    double margin = 0.05 * std::abs(*estimate) + 1.0;
    double trial = *estimate - margin;
    while (trial > lower_bound - 1.0 && out.factorizations < options.max_factorizations) {
      ++out.factorizations;
      if (factor.compute(K, M, trial, 0)) {
        sigma = trial;
        have_factor = true;
        break;
      }
      margin *= 4.0;
      trial = *estimate - margin;
    }
  }
  if (!have_factor) {
    ++out.factorizations;
    if (!factor.compute(K, M, sigma, 0))
      throw ConvergenceError("shifted matrix not positive definite at the certified lower bound");
  }

  VectorXd start = random_vector(n, gen);
  int budget = std::min(options.max_steps, 3 * count + 50);
  while (static_cast<int>(locked.size()) < count) {
    const int need = count - static_cast<int>(locked.size());
    LanczosRun run = run_lanczos(factor, M, Y, MY, sigma, need, start, budget, options, gen);
    out.lanczos_steps += run.steps;
    if (run.ritz_values.size() < need)
      throw ConvergenceError("shift-invert Lanczos broke down (steps " + std::to_string(out.lanczos_steps) + ")");

    // The shift lies below every unlocked eigenvalue, so converged leading
    // Ritz pairs are the next eigenpairs in order.
    const int k = run.leading_converged();
    for (int i = 0; i < k; ++i) {
      locked.push_back(run.ritz_values[i]);
      bounds.push_back(run.bounds[i]);
      Y.conservativeResize(n, Y.cols() + 1);
      MY.conservativeResize(n, MY.cols() + 1);
      Y.col(Y.cols() - 1) = run.ritz_vectors.col(i);
      MY.col(MY.cols() - 1) = M * run.ritz_vectors.col(i);
    }
    if (static_cast<int>(locked.size()) == count) break;
    if (out.factorizations >= options.max_factorizations ||
        (k == 0 && budget >= options.max_steps && run.steps >= options.max_steps))
      throw ConvergenceError("shift-invert Lanczos did not converge (steps " +
                             std::to_string(out.lanczos_steps) + ")");

    // Move the shift up toward the lowest unconverged Ritz value (an upper
    // bound), keeping it above the locked pairs; the inertia of K - sigma M
    // certifies that no eigenvalue was skipped.
    const double lo = run.ritz_values[k];
    const double spread = run.ritz_values[need - 1] - lo;
    const double floor = locked.empty() ? -std::numeric_limits<double>::infinity() : locked.back();
    // Early Ritz values from a distant shift can be far off, so the spread
    // only widens the margin up to a fraction of |lo|.
    double margin = std::max(0.01 * (std::abs(lo) + 1.0), std::min(0.5 * spread, 0.25 * (std::abs(lo) + 1.0)));
    const int negative = static_cast<int>(locked.size());
    bool moved = false;
    while (out.factorizations < options.max_factorizations) {
      double trial = lo - margin;
      if (trial <= floor) trial = floor + 0.5 * (lo - floor);
      if (trial <= sigma && negative == 0) break;
      ++out.factorizations;
      if (factor.compute(K, M, trial, negative)) {
        sigma = trial;
        moved = true;
        break;
      }
      if (trial == floor + 0.5 * (lo - floor)) break;
      margin *= 4.0;
    }
    if (!moved) {
      if (negative > 0) throw ConvergenceError("no certified shift between locked and remaining eigenvalues");
      ++out.factorizations;
      factor.compute(K, M, sigma, 0);
      budget = options.max_steps;
    } else if (k == 0) {
      budget = std::min(options.max_steps, 2 * budget);
    }
    start = run.ritz_vectors.rightCols(need - k).rowwise().sum();
    start += 1e-3 * random_vector(n, gen);
  }

  out.shift = sigma;
  out.values = Eigen::Map<const VectorXd>(locked.data(), static_cast<Eigen::Index>(locked.size()));
  out.vectors = Y;
  std::vector<int> order(out.values.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return out.values[a] < out.values[b]; });
  VectorXd vals(out.values.size()), bnds(out.values.size());
  MatrixXd vecs(out.vectors.rows(), out.vectors.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    vals[i] = out.values[order[i]];
    bnds[i] = bounds[order[i]];
    vecs.col(i) = out.vectors.col(order[i]);
  }
  out.values = vals;
  out.vectors = vecs;
  out.error_bounds = bnds;
  out.residuals = explicit_residuals(K, M, out.values, out.vectors);
  return out;
}

EigenResult dense_lowest_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int count) {
  const MatrixXd Kd = MatrixXd(K);
  const MatrixXd Md = MatrixXd(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Kd, Md);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense generalized eigensolver failed");
  const int k = std::min<int>(count, static_cast<int>(K.rows()));
  EigenResult out;
  out.values = es.eigenvalues().head(k);
  out.vectors = es.eigenvectors().leftCols(k);
  for (int i = 0; i < k; ++i) {
    const double n = std::sqrt(out.vectors.col(i).dot(M * out.vectors.col(i)));
    out.vectors.col(i) /= n;
  }
  out.residuals = explicit_residuals(K, M, out.values, out.vectors);
  out.error_bounds = VectorXd::Constant(k, std::numeric_limits<double>::epsilon());
  return out;
}

}  // namespace trimerlab
