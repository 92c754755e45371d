#include "trimerlab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trimerlab/error.hpp"

namespace trimerlab::radial {

namespace {
constexpr double kBig = 1e200;
}

Shooter::Shooter(std::function<double(double)> c, double x_min, double x_limit, double k,
                 ShootingOptions options)
    : c_(std::move(c)), x_min_(x_min), x_limit_(x_limit), k_(k), opt_(options) {
  if (!(x_limit > x_min) || !(k > 0) || !(opt_.step > 0)) throw InvalidInput("invalid shooting domain");
}

double Shooter::c_at(std::size_t i) {
  while (c_cache_.size() <= i) c_cache_.push_back(c_(x_at(c_cache_.size())));
  return c_cache_[i];
}

double Shooter::q_at(std::size_t i, double eta) {
  return c_at(i) + k_ * std::exp(2.0 * x_at(i) + eta);
}

std::optional<Shooter::Turning> Shooter::turning(double eta) {
  Turning t{0, 0, 0};
  bool any = false;
  std::size_t i = 0;
  for (;; ++i) {
    if (x_at(i) > x_limit_) return std::nullopt;
    const double c = c_at(i);
    const double e = k_ * std::exp(2.0 * x_at(i) + eta);
    if (c + e < 0) {
      if (!any) t.inner = i;
      any = true;
      t.outer = i;
    } else if (e >= 4.0 * std::max(1.0, std::abs(c))) {
      break;
    }
  }
  if (!any) {
    t.inner = t.outer = t.end = 0;
    return t;
  }
  const double x_need = x_at(t.outer) + std::log(opt_.turning_factor);
  double integral = 0.0;
  std::size_t j = t.outer + 1;
  for (;; ++j) {
    if (x_at(j) > x_limit_) return std::nullopt;
    integral += std::sqrt(std::max(0.0, q_at(j, eta))) * opt_.step;
    if (integral >= opt_.decay && x_at(j) >= x_need) break;
  }
  t.end = j;
  return t;
}

std::optional<double> Shooter::outer_boundary(double eta) {
  auto t = turning(eta);
  if (!t) return std::nullopt;
  return x_at(t->end);
}

int Shooter::integrate_nodes(double eta, std::size_t end) {
  const double h2 = opt_.step * opt_.step / 12.0;
  double g0 = 0.0, g1 = 1e-30;
  double f0 = 1.0 - h2 * q_at(0, eta), f1 = 1.0 - h2 * q_at(1, eta);
  int nodes = 0;
  for (std::size_t i = 1; i < end; ++i) {
    const double f2 = 1.0 - h2 * q_at(i + 1, eta);
    const double g2 = ((12.0 - 10.0 * f1) * g1 - f0 * g0) / f2;
    if ((g1 > 0 && g2 <= 0) || (g1 < 0 && g2 >= 0)) ++nodes;
    g0 = g1;
    g1 = g2;
    f0 = f1;
    f1 = f2;
    if (std::abs(g1) > kBig) {
      g0 /= kBig;
      g1 /= kBig;
    }
  }
  return nodes;
}

std::optional<int> Shooter::count(double eta) {
  auto t = turning(eta);
  if (!t) return std::nullopt;
  if (t->end == 0) return 0;
  return integrate_nodes(eta, t->end);
}

std::optional<double> Shooter::deepest_eta() {
  if (deepest_done_) return deepest_;
  deepest_done_ = true;
  // Any level needs c + k e^{2x+eta} < 0 somewhere: eta < ln(-c/k) - 2x.
  const double cap = std::log(1e3 / k_);
  for (std::size_t i = 0; x_at(i) <= x_limit_; ++i) {
    const double x = x_at(i);
    if (deepest_ && cap - 2.0 * x < *deepest_ - 1.0) break;
    const double c = c_at(i);
    if (c < 0) {
      const double e = std::log(-c / k_) - 2.0 * x;
      if (!deepest_ || e > *deepest_) deepest_ = e;
    }
  }
  return deepest_;
}

std::vector<double> Shooter::wavefunction(double eta, double* x_turn) {
  auto t = turning(eta);
  if (!t || t->end == 0) throw DomainError("no classically allowed region for the requested energy");
  const std::size_t end = t->end;
  const std::size_t m = t->outer;
  const std::size_t w = std::min<std::size_t>(50, std::min(m, end - m - 1) / 2);
  const double h2 = opt_.step * opt_.step / 12.0;
  std::vector<double> f(end + 1);
  for (std::size_t i = 0; i <= end; ++i) f[i] = 1.0 - h2 * q_at(i, eta);

  // Outward to m + w.
  std::vector<double> go(m + w + 1, 0.0);
  go[1] = 1e-30;
  for (std::size_t i = 1; i + 1 <= m + w; ++i) {
    go[i + 1] = ((12.0 - 10.0 * f[i]) * go[i] - f[i - 1] * go[i - 1]) / f[i + 1];
    if (std::abs(go[i + 1]) > kBig)
      for (std::size_t j = 0; j <= i + 1; ++j) go[j] /= kBig;
  }
  // Inward from end to m - w.
  std::vector<double> gi(end + 1, 0.0);
  gi[end - 1] = 1e-30;
  for (std::size_t i = end - 1; i > m - w; --i) {
    gi[i - 1] = ((12.0 - 10.0 * f[i]) * gi[i] - f[i + 1] * gi[i + 1]) / f[i - 1];
    if (std::abs(gi[i - 1]) > kBig)
      for (std::size_t j = i - 1; j <= end; ++j) gi[j] /= kBig;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = m - w; i <= m + w; ++i) {
    num += go[i] * gi[i];
    den += gi[i] * gi[i];
  }
  const double scale = den > 0 ? num / den : 1.0;
  std::vector<double> g(end + 1);
  for (std::size_t i = 0; i <= end; ++i) g[i] = i <= m ? go[i] : scale * gi[i];
  // Normalize with weight e^{2x} relative to the turning point.
  const double xt = x_at(m);
  double norm = 0.0;
  for (std::size_t i = 0; i <= end; ++i) norm += std::exp(2.0 * (x_at(i) - xt)) * g[i] * g[i];
  norm = std::sqrt(norm * opt_.step);
  for (double& v : g) v /= norm;
  if (x_turn) *x_turn = xt;
  return g;
}

Level Shooter::refine(int n, double eta_lo, double eta_hi) {
  int iterations = 0;
  while (eta_hi - eta_lo > opt_.tolerance) {
    if (++iterations > 200) throw ConvergenceError("level bisection did not converge");
    const double mid = 0.5 * (eta_lo + eta_hi);
    auto c = count(mid);
    if (!c) throw DomainError("domain exhausted while refining level " + std::to_string(n));
    if (*c >= n + 1)
      eta_lo = mid;
    else
      eta_hi = mid;
  }
  Level lv;
  lv.index = n;
  lv.eta = 0.5 * (eta_lo + eta_hi);
  auto t = turning(lv.eta);
  if (!t) throw DomainError("domain exhausted at level " + std::to_string(n));
  lv.nodes = integrate_nodes(lv.eta, t->outer + 1);
  lv.x_inner = x_at(t->inner);
  lv.x_outer = x_at(t->outer);
  lv.x_end = x_at(t->end);
  double xt = 0.0;
  const auto g = wavefunction(lv.eta, &xt);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = x_at(i) - xt;
    const double w2 = std::exp(2.0 * d) * g[i] * g[i];
    a += w2;
    b += w2 * std::exp(d);
  }
  lv.mean_radius = std::exp(xt) * b / a;
  return lv;
}

LevelSet Shooter::solve(int n_max) {
  if (n_max < 1) throw InvalidInput("n_max must be >= 1");
  LevelSet out;
  const auto top = deepest_eta();
  if (!top) return out;
  double eta = *top + 0.01;
  int have = 0;
  {
    auto c = count(eta);
    if (!c) {
      out.truncated = true;
      return out;
    }
    have = *c;
  }
  // Search span without a new level before giving up (energy decades * ln 10).
  const double max_gap = 500.0;
  double last_new = eta;
  while (static_cast<int>(out.levels.size()) < n_max) {
    const double next = eta - opt_.sweep_step;
    auto c = count(next);
    if (!c) {
      out.truncated = true;
      break;
    }
    for (int n = have; n < std::min(*c, n_max); ++n) out.levels.push_back(refine(n, next, eta));
    if (*c > have) last_new = next;
    have = std::max(have, *c);
    eta = next;
    if (last_new - eta > max_gap) {
      out.truncated = true;
      break;
    }
  }
  return out;
}

}  // namespace trimerlab::radial
