#pragma once

// Lowest eigenpairs of a sparse symmetric-definite pencil K x = lambda M x
// by shift-invert Lanczos with full reorthogonalization and locking. The first
// shift lies below the spectrum (certified by a sparse Cholesky factorization
// of K - sigma M); later shifts sit between the locked pairs and the rest,
// certified by the inertia of an LDL^T factorization.

#include <optional>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace trimerlab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct LanczosOptions {
  /// Ritz residual relative to the transformed eigenvalue, tightened so the
  /// eigenvalue error also stays below tolerance * (|lambda| + 1).
  double tolerance = 1e-11;
  int max_steps = 400;
  int max_factorizations = 40;
  std::uint64_t seed = 0x5eed1234abcdULL;
};

struct EigenResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // M-orthonormal columns
  /// ||K x - lambda M x|| / (||K x|| + |lambda| ||M x||) per pair.
  Eigen::VectorXd residuals;
  /// Lanczos bound on |lambda error| / (|lambda| + 1) per pair.
  Eigen::VectorXd error_bounds;
  double shift = 0.0;
  int factorizations = 0;
  int lanczos_steps = 0;
};

/// Computes the `count` lowest eigenpairs. `lower_bound` must be a certified
/// lower bound of the spectrum (used as a fallback shift); `estimate`, when
/// given, is a guess of the lowest eigenvalue used to place the first shift.
EigenResult lowest_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int count,
                              double lower_bound, std::optional<double> estimate,
                              const LanczosOptions& options = {});

/// Dense reference solver (generalized self-adjoint), for small problems and tests.
EigenResult dense_lowest_eigenpairs(const SparseMatrix& K, const SparseMatrix& M, int count);

}  // namespace trimerlab
