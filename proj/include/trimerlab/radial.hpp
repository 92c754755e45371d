#pragma once

// Log-space Numerov shooting for radial problems of the form
//
//   g''(x) = [c(x) + k e^{2x + eta}] g(x),   x = ln r,
//
// where the physical energy is eps = -e^{eta} (relative to a threshold) and
// u(r) = e^{x/2} g(x). Both the two-body radial equation and the
// single-channel hyperradial equation reduce to this form. Energies are
// handled through eta = ln|eps| so ladders spanning hundreds of decades
// never underflow.

#include <functional>
#include <optional>
#include <vector>

namespace trimerlab::radial {

struct ShootingOptions {
  double step = 0.004;
  /// Decay exponent integral required past the outer turning point.
  double decay = 25.0;
  /// The outer boundary also lies at least this many times the turning radius.
  double turning_factor = 3.0;
  /// Absolute tolerance on eta, i.e. relative tolerance on the energy.
  double tolerance = 1e-9;
  /// Sweep increment in eta while bracketing levels.
  double sweep_step = 0.5;
};

struct Level {
  int index = 0;
  double eta = 0.0;  ///< ln|eps|
  int nodes = 0;
  double mean_radius = 0.0;  ///< <r> with weight |u|^2 dr
  double x_inner = 0.0, x_outer = 0.0;  ///< classical turning points
  double x_end = 0.0;  ///< outer boundary used
};

struct LevelSet {
  std::vector<Level> levels;
  /// True when further levels exist but their domain exceeds `x_limit`.
  bool truncated = false;
};

/// Sturm-sequence shooting solver on a uniform grid starting at x_min with a
/// Dirichlet condition there. c(x) is sampled lazily and cached.
class Shooter {
 public:
  Shooter(std::function<double(double)> c, double x_min, double x_limit, double k,
          ShootingOptions options = {});

  /// Outer boundary for the given eta, or nullopt when it lies beyond x_limit.
  std::optional<double> outer_boundary(double eta);

  /// Number of levels with eps < -e^{eta}; nullopt when the domain is exhausted.
  std::optional<int> count(double eta);

  /// Largest eta any level can have (nullopt when c >= 0 everywhere sampled).
  std::optional<double> deepest_eta();

  /// Lowest n_max levels by sweep bracketing and node-count bisection.
  LevelSet solve(int n_max);

  /// Refines level n inside [eta_lo, eta_hi] with count(eta_lo) >= n+1 and count(eta_hi) <= n.
  Level refine(int n, double eta_lo, double eta_hi);

  /// Normalized g on the grid for eta (outward/inward matched), for tests.
  std::vector<double> wavefunction(double eta, double* x_turn = nullptr);

  double x_min() const { return x_min_; }
  double step() const { return opt_.step; }

 private:
  double c_at(std::size_t i);
  double q_at(std::size_t i, double eta);
  double x_at(std::size_t i) const { return x_min_ + opt_.step * static_cast<double>(i); }
  struct Turning {
    std::size_t inner, outer, end;
  };
  std::optional<Turning> turning(double eta);
  int integrate_nodes(double eta, std::size_t end);

  std::function<double(double)> c_;
  double x_min_, x_limit_, k_;
  ShootingOptions opt_;
  std::vector<double> c_cache_;
  std::optional<double> deepest_;
  bool deepest_done_ = false;
};

}  // namespace trimerlab::radial
