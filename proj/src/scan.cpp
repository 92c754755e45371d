#include "trimerlab/scan.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "trimerlab/csv.hpp"
#include "trimerlab/error.hpp"
#include "trimerlab/twobody.hpp"

namespace trimerlab {

namespace {

// Regime of one alpha^2 in the scan.
enum class Regime { Subcritical, Threshold, Crossover };

Regime regime(const ModelConfig& cfg, const ScanOptions& o, std::optional<double> dimer_radius) {
  if (cfg.alpha2 <= 0 || !dimer_radius) return Regime::Subcritical;
  if (o.threshold_window_hi * *dimer_radius > o.R_cap * cfg.r0) return Regime::Crossover;
  return Regime::Threshold;
}

// Rounds R up to the next multiple of 1/per_decade in log10.
double round_up_log(double R, double per_decade) {
  return std::pow(10.0, std::ceil(std::log10(R) * per_decade - 1e-9) / per_decade);
}

std::string clean(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::optional<FitWindow> subcritical_window(const std::vector<double>& R, const std::vector<double>& W) {
  if (R.size() != W.size() || R.empty()) throw InvalidInput("R and W must have equal nonzero length");
  std::size_t first = 0;
  for (std::size_t i = R.size(); i-- > 0;) {
    if (!(W[i] < 0)) {
      first = i + 1;
      break;
    }
  }
  if (first >= R.size()) return std::nullopt;
  const double lo = 10.0 * R[first];
  if (!(R.back() >= 10.0 * lo * (1 - 1e-12))) return std::nullopt;
  return FitWindow{lo, R.back()};
}

std::vector<double> scan_grid(const ModelConfig& cfg, const ScanOptions& o,
                              std::optional<double> dimer_radius) {
  const double lo = o.wall * cfg.r0;
  switch (regime(cfg, o, dimer_radius)) {
    case Regime::Subcritical:
      return log_grid(lo, o.subcritical_R_max * cfg.r0, o.per_decade);
    case Regime::Crossover:
      return log_grid(lo, o.R_cap * cfg.r0, o.per_decade);
    case Regime::Threshold: {
      const double top = std::max(1e5 * cfg.r0, o.threshold_window_hi * *dimer_radius);
      return log_grid(lo, round_up_log(top / cfg.r0, o.per_decade) * cfg.r0, o.per_decade);
    }
  }
  return {};
}

PotentialSource scan_source(const ChannelTable& table, const ModelConfig& cfg, const ScanOptions& o,
                            ScanRow& row) {
  const std::vector<double>& R = table.R;
  const std::vector<double>& W = table.W.at(0);
  const double E_th = row.E00.value_or(0.0);
  const PotentialSource base = PotentialSource::table(table, 0, E_th);

  if (regime(cfg, o, row.dimer_radius) == Regime::Threshold) {
    const FitWindow window{o.threshold_window_lo * *row.dimer_radius,
                           o.threshold_window_hi * *row.dimer_radius};
    TailFit fit = fit_threshold_tail(R, W, E_th, window);
    ModelTail tail;
    tail.form = TailForm::SupercriticalThreshold;
    tail.E_th = E_th;
    tail.alpha_eff2 = fit.param("alpha_eff2");
    tail.r0 = cfg.r0;
    row.tail_fit = std::move(fit);
    row.R_splice = window.R_lo;
    return base.with_tail(tail, window.R_lo).with_wall(o.wall * cfg.r0);
  }

  // Subcritical-log tail, offset by the dimer threshold in the crossover regime.
  std::vector<double> shifted(W.size());
  for (std::size_t i = 0; i < W.size(); ++i) shifted[i] = W[i] - E_th;
  const auto window = subcritical_window(R, shifted);
  if (!window) return base.with_wall(o.wall * cfg.r0);
  TailFit fit = fit_subcritical_tail(R, shifted, *window, cfg.r0);
  ModelTail tail;
  tail.form = TailForm::SubcriticalLog;
  tail.beta = fit.param("beta");
  tail.delta = fit.param("delta");
  tail.E_th = E_th;
  tail.r0 = cfg.r0;
  row.tail_fit = std::move(fit);
  row.R_splice = window->R_lo;
  return base.with_tail(tail, window->R_lo).with_wall(o.wall * cfg.r0);
}

std::vector<ScanRow> spectrum_scan(const ModelConfig& base, const std::vector<double>& alpha2,
                                   const ScanOptions& o, const TableProvider& tables) {
  if (o.n_states < 1) throw InvalidInput("n_states must be >= 1");
  if (!(o.wall > 0)) throw InvalidInput("wall must be positive");
  for (std::size_t i = 1; i < alpha2.size(); ++i)
    if (!(alpha2[i] > alpha2[i - 1])) throw InvalidInput("alpha2 list must be strictly ascending");

  std::vector<ScanRow> rows;
  rows.reserve(alpha2.size());
  for (double a2 : alpha2) {
    ScanRow row;
    row.alpha2 = a2;
    try {
      ModelConfig cfg = base;
      cfg.alpha2 = a2;
      cfg.validate();
      if (a2 > 0) {
        if (auto d = lowest_dimer(cfg, 0)) {
          row.E00 = d->E;
          row.dimer_radius = d->r_mean;
        }
      }
      const std::vector<double> grid = scan_grid(cfg, o, row.dimer_radius);
      const ChannelTable table =
          tables ? tables(cfg, grid, 1) : channel_table(cfg, grid, 1, o.policy, o.table);
      const PotentialSource src = scan_source(table, cfg, o, row);
      BoundStateSet set = solve_bound_states(src, o.n_states, o.bound);
      row.states = std::move(set.states);
      row.truncated = set.truncated;
      row.source = std::move(set.source);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<ScanRow>& rows) {
  os << "alpha2,n,E,E_rel,E00,R_mean,nodes,truncated,status\n";
  for (const ScanRow& r : rows) {
    const std::string e00 = r.E00 ? csv::num(*r.E00) : "";
    const std::string trunc = r.truncated ? "1" : "0";
    if (!r.error.empty()) {
      os << csv::num(r.alpha2) << ",,,," << e00 << ",,," << trunc << ",error: " << clean(r.error) << "\n";
      continue;
    }
    if (r.states.empty()) {
      os << csv::num(r.alpha2) << ",,,," << e00 << ",,," << trunc << ",no-states\n";
      continue;
    }
    for (const BoundState& s : r.states) {
      os << csv::num(r.alpha2) << ',' << s.n << ',' << csv::num(s.E) << ',' << csv::num(s.E_rel) << ','
         << e00 << ',' << csv::num(s.R_mean) << ',' << s.nodes << ',' << trunc << ",ok\n";
    }
  }
}

nlohmann::json to_json(const std::vector<ScanRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const ScanRow& r : rows) {
    nlohmann::json j;
    j["alpha2"] = r.alpha2;
    j["E00"] = r.E00 ? nlohmann::json(*r.E00) : nlohmann::json(nullptr);
    j["dimer_radius"] = r.dimer_radius ? nlohmann::json(*r.dimer_radius) : nlohmann::json(nullptr);
    j["n_states"] = r.states.size();
    j["truncated"] = r.truncated;
    j["tail_fit"] = r.tail_fit ? nlohmann::json(*r.tail_fit) : nlohmann::json(nullptr);
    j["R_splice"] = r.R_splice ? nlohmann::json(*r.R_splice) : nlohmann::json(nullptr);
    j["error"] = r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error);
    j["source"] = r.source;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace trimerlab
