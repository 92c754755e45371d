#pragma once

// Independent reference solvers for tests.
//
// fd_level solves -g'' + c(x) g = eps k e^{2x} g on [x_min, x_max] with
// g = 0 at both ends by second-order finite differences. Level n is
// isolated by Sturm counting (negative LDL^T pivots of the tridiagonal
// A - eps B) with bisection in ln|eps|, and the grid error is removed by two
// Richardson steps over h, h/2, h/4.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline int sturm_count(const std::vector<double>& c, const std::vector<double>& b, double h, double eps) {
  const double off2 = 1.0 / (h * h * h * h);
  int negative = 0;
  double d = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double a = 2.0 / (h * h) + c[i] - eps * b[i];
    if (i > 0) a -= off2 / d;
    if (a == 0.0) a = -1e-300;
    if (a < 0) ++negative;
    d = a;
  }
  return negative;
}

/// Level n (0-based) with eps < 0 on a uniform grid of `cells` cells.
inline double fd_level_on_grid(const std::function<double(double)>& c, double k, double x_min,
                               double x_max, int cells, int n) {
  const double h = (x_max - x_min) / cells;
  std::vector<double> cv(cells - 1), bv(cells - 1);
  for (int i = 1; i < cells; ++i) {
    const double x = x_min + i * h;
    cv[i - 1] = c(x);
    bv[i - 1] = k * std::exp(2.0 * x);
  }
  // Bracket in eta = ln|eps|: count(-e^eta) decreases with eta.
  double hi = 50.0, lo = -700.0;
  while (sturm_count(cv, bv, h, -std::exp(hi)) > n) hi += 20.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(cv, bv, h, -std::exp(mid)) >= n + 1)
      lo = mid;
    else
      hi = mid;
  }
  return -std::exp(0.5 * (lo + hi));
}

/// Richardson-extrapolated level n from spacings close to h, h/2 and h/4.
inline double fd_level(const std::function<double(double)>& c, double k, double x_min, double x_max,
                       double h, int n) {
  const int cells = static_cast<int>(std::ceil((x_max - x_min) / h));
  const double e1 = fd_level_on_grid(c, k, x_min, x_max, cells, n);
  const double e2 = fd_level_on_grid(c, k, x_min, x_max, 2 * cells, n);
  const double e4 = fd_level_on_grid(c, k, x_min, x_max, 4 * cells, n);
  const double r1 = (4.0 * e2 - e1) / 3.0;
  const double r2 = (4.0 * e4 - e2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

}  // namespace oracle
