#include "trimerlab/twobody.hpp"

#include <cmath>
#include <ostream>

#include "trimerlab/csv.hpp"
#include "trimerlab/error.hpp"
#include "trimerlab/radial.hpp"

namespace trimerlab {

double radial_effective_potential(double r, const ModelConfig& cfg, int l) {
  if (l < 0) throw InvalidInput("l must be >= 0");
  return pair_potential(r, cfg) + l * (l + 1.0) / (units::mass * r * r);
}

TwoBodyLevels solve_two_body(const ModelConfig& cfg, int l, int n_levels, RadialDomain domain,
                             const TwoBodyOptions& options) {
  cfg.validate();
  if (cfg.cutoff == CutoffForm::None)
    throw PreconditionError("the pure inverse-square form has no ground state; use a regularized cutoff");
  if (l < 0) throw InvalidInput("l must be >= 0");
  if (n_levels < 1) throw InvalidInput("n_levels must be >= 1");
  if (!(domain.r_min > 0) || !(domain.r_max > domain.r_min))
    throw InvalidInput("invalid radial domain");

  TwoBodyLevels out;
  out.cfg = cfg;
  out.l = l;
  out.r_min = domain.r_min * cfg.r0;
  out.r_max = domain.r_max * cfg.r0;
  out.options = options;
  // Regularization only weakens the pure potential, which binds nothing
  // unless alpha^2 > l(l+1).
  if (cfg.alpha2 <= l * (l + 1.0)) return out;

  const double ll = l * (l + 1.0);
  const double r0 = cfg.r0;
  auto c = [&cfg, ll, r0](double x) {
    // r^2 v(r) depends on r / r0 only.
    const double y = std::exp(x);
    const double D = cutoff_shape(cfg.cutoff, y) + y * y;
    return 0.25 + ll - cfg.strength() * y * y / D;
  };
  radial::ShootingOptions so;
  so.step = options.step;
  so.tolerance = options.tolerance;
  // Work in units of r0 and rescale afterwards, so r0-scaling is exact.
  radial::Shooter shooter(c, std::log(domain.r_min), std::log(domain.r_max), 1.0, so);
  const radial::LevelSet set = shooter.solve(n_levels);
  if (static_cast<int>(set.levels.size()) < n_levels)
    throw DomainError("only " + std::to_string(set.levels.size()) + " of " +
                      std::to_string(n_levels) + " levels fit inside r_max = " +
                      std::to_string(out.r_max) + "; enlarge the domain");
  for (const auto& lv : set.levels) {
    TwoBodyLevel t;
    t.v = lv.index;
    t.E = -std::exp(lv.eta) / (r0 * r0);
    t.r_mean = lv.mean_radius * r0;
    t.nodes = lv.nodes;
    t.r_inner = std::exp(lv.x_inner) * r0;
    t.r_outer = std::exp(lv.x_outer) * r0;
    if (t.nodes != t.v)
      throw ConvergenceError("level " + std::to_string(t.v) + " has " + std::to_string(t.nodes) +
                             " nodes");
    out.levels.push_back(t);
  }
  return out;
}

std::optional<TwoBodyLevel> lowest_dimer(const ModelConfig& cfg, int l) {
  // Near alpha^2 = l(l+1) the dimer size grows like exp(pi / alpha).
  const auto lv = solve_two_body(cfg, l, 1, RadialDomain{1e-6, 1e200});
  if (lv.levels.empty()) return std::nullopt;
  return lv.levels.front();
}

double lowest_threshold(const ModelConfig& cfg, int l) {
  const auto d = lowest_dimer(cfg, l);
  return d ? d->E : 0.0;
}

void write_csv(std::ostream& os, const TwoBodyLevels& t) {
  os << "v,l,E,r_mean,nodes\n";
  for (const auto& lv : t.levels)
    os << lv.v << ',' << t.l << ',' << csv::num(lv.E) << ',' << csv::num(lv.r_mean) << ','
       << lv.nodes << '\n';
}

nlohmann::json sidecar(const TwoBodyLevels& t) {
  return nlohmann::json{{"config", t.cfg},
                        {"l", t.l},
                        {"domain", {{"r_min", t.r_min}, {"r_max", t.r_max}}},
                        {"tolerances", {{"relative_energy", t.options.tolerance}, {"step", t.options.step}}},
                        {"levels", t.levels.size()}};
}

}  // namespace trimerlab
