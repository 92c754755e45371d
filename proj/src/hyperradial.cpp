#include "trimerlab/hyperradial.hpp"

#include <cmath>
#include <limits>
#include <ostream>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "trimerlab/csv.hpp"
#include "trimerlab/error.hpp"
#include "trimerlab/radial.hpp"

namespace trimerlab {

std::string to_string(TailForm f) {
  switch (f) {
    case TailForm::SubcriticalLog: return "subcritical-log";
    case TailForm::PureInverseSquare: return "pure-inverse-square";
    case TailForm::SupercriticalThreshold: return "supercritical-threshold";
    case TailForm::FermionLog: return "fermion-log";
  }
  return "unknown";
}

TailForm tail_form_from_string(const std::string& s) {
  if (s == "subcritical-log") return TailForm::SubcriticalLog;
  if (s == "pure-inverse-square") return TailForm::PureInverseSquare;
  if (s == "supercritical-threshold") return TailForm::SupercriticalThreshold;
  if (s == "fermion-log") return TailForm::FermionLog;
  throw InvalidInput("unknown tail form '" + s + "'");
}

double ModelTail::reduced(double x) const {
  const double L = x - std::log(r0);
  switch (form) {
    case TailForm::SubcriticalLog:
      // Where the radicand is negative the form carries no attraction.
      return -std::sqrt(std::max(0.0, beta * L + delta));
    case TailForm::PureInverseSquare:
      return -(alpha_nu2 + 0.25);
    case TailForm::SupercriticalThreshold:
      return -(alpha_eff2 + 0.25);
    case TailForm::FermionLog:
      if (!(L > 0)) throw DomainError("fermion-log tail is undefined for R <= r0");
      return -(alpha_eff2 + 0.25 + gamma / L);
  }
  return 0.0;
}

void to_json(nlohmann::json& j, const ModelTail& t) {
  j = nlohmann::json{{"form", to_string(t.form)}, {"r0", t.r0}};
  switch (t.form) {
    case TailForm::SubcriticalLog:
      j["beta"] = t.beta;
      j["delta"] = t.delta;
      break;
    case TailForm::PureInverseSquare:
      j["alpha_nu2"] = t.alpha_nu2;
      break;
    case TailForm::SupercriticalThreshold:
      j["E_th"] = t.E_th;
      j["alpha_eff2"] = t.alpha_eff2;
      break;
    case TailForm::FermionLog:
      j["alpha_eff2"] = t.alpha_eff2;
      j["gamma"] = t.gamma;
      break;
  }
  if (t.E_th != 0.0) j["E_th"] = t.E_th;
}

void from_json(const nlohmann::json& j, ModelTail& t) {
  try {
    t.form = tail_form_from_string(j.at("form").get<std::string>());
    t.r0 = j.value("r0", 1.0);
    t.beta = j.value("beta", 0.0);
    t.delta = j.value("delta", 0.0);
    t.alpha_nu2 = j.value("alpha_nu2", 0.0);
    t.alpha_eff2 = j.value("alpha_eff2", 0.0);
    t.gamma = j.value("gamma", 0.0);
    t.E_th = j.value("E_th", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed tail description: ") + e.what());
  }
  if (!(t.r0 > 0)) throw InvalidInput("tail r0 must be positive");
}

struct PotentialSource::Table {
  std::vector<double> R, W;
  bool log_mode = false;
  nlohmann::json provenance;
  std::optional<boost::math::interpolators::pchip<std::vector<double>>> interp;
};

PotentialSource PotentialSource::table(std::vector<double> R, std::vector<double> W, double E_th,
                                       nlohmann::json provenance) {
  if (R.size() != W.size() || R.size() < 4) throw InvalidInput("a table needs at least 4 (R, W) samples");
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (!(R[i] > 0) || !std::isfinite(W[i])) throw InvalidInput("invalid table sample");
    if (i > 0 && !(R[i] > R[i - 1])) throw InvalidInput("table R must be strictly ascending");
  }
  auto t = std::make_shared<Table>();
  t->R = R;
  t->W = W;
  t->provenance = std::move(provenance);
  t->log_mode = std::all_of(W.begin(), W.end(), [](double w) { return w < 0; });
  std::vector<double> x(R.size()), y(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) {
    x[i] = std::log(R[i]);
    y[i] = t->log_mode ? std::log(-W[i]) : units::two_mu * R[i] * R[i] * W[i];
  }
  t->interp.emplace(std::move(x), std::move(y));
  PotentialSource s;
  s.table_ = std::move(t);
  s.E_th_ = E_th;
  return s;
}

PotentialSource PotentialSource::table(const ChannelTable& t, int channel, double E_th) {
  if (channel < 0 || channel >= t.n_channels()) throw InvalidInput("channel index out of range");
  nlohmann::json prov{{"config", t.cfg}, {"channel", channel}, {"policy", t.policy}, {"dlnR", t.dlnR}};
  return table(t.R, t.W[channel], E_th, std::move(prov));
}

PotentialSource PotentialSource::model(const ModelTail& tail) {
  PotentialSource s;
  s.tail_ = tail;
  s.E_th_ = tail.threshold();
  return s;
}

PotentialSource PotentialSource::with_wall(double R_wall) const {
  if (!(R_wall > 0)) throw InvalidInput("wall radius must be positive");
  if (table_ && !(splice_ && R_wall >= *splice_) && R_wall < table_->R.front() * (1 - 1e-12))
    throw DomainError("wall lies below the table range");
  PotentialSource s = *this;
  s.wall_ = R_wall;
  return s;
}

PotentialSource PotentialSource::with_tail(const ModelTail& tail, double R_splice) const {
  if (!table_) throw InvalidInput("a tail can only be spliced onto a table");
  if (!(R_splice >= table_->R.front() && R_splice <= table_->R.back()))
    throw DomainError("splice radius outside the table range");
  PotentialSource s = *this;
  s.tail_ = tail;
  s.splice_ = R_splice;
  s.E_th_ = tail.threshold();
  return s;
}

double PotentialSource::R_lo() const {
  if (wall_) return *wall_;
  return table_ ? table_->R.front() : 0.0;
}

double PotentialSource::R_hi() const {
  if (tail_) return std::numeric_limits<double>::infinity();
  return table_->R.back();
}

double PotentialSource::reduced(double x) const {
  const double R = std::exp(x);
  if (tail_ && (!table_ || R >= *splice_)) return tail_->reduced(x);
  if (R < table_->R.front() * (1 - 1e-12) || R > table_->R.back() * (1 + 1e-12))
    throw DomainError("R = " + csv::num(R) + " outside the tabulated range");
  const double y = (*table_->interp)(std::clamp(x, std::log(table_->R.front()), std::log(table_->R.back())));
  const double two_mu_R2 = units::two_mu * R * R;
  if (table_->log_mode) return -two_mu_R2 * (std::exp(y) + E_th_);
  return y - two_mu_R2 * E_th_;
}

double PotentialSource::W(double R) const {
  if (!(R > 0)) throw InvalidInput("R must be positive");
  if (R < R_lo() * (1 - 1e-12)) throw DomainError("R below the source range");
  return E_th_ + reduced(std::log(R)) / (units::two_mu * R * R);
}

nlohmann::json PotentialSource::describe() const {
  nlohmann::json j;
  j["threshold"] = E_th_;
  if (table_) {
    j["table"] = {{"samples", table_->R.size()},
                  {"R_min", table_->R.front()},
                  {"R_max", table_->R.back()},
                  {"interpolation", table_->log_mode ? "pchip(lnR, ln|W|)" : "pchip(lnR, 2muR^2 W)"},
                  {"provenance", table_->provenance}};
  }
  if (tail_) j["tail"] = *tail_;
  if (splice_) j["splice_R"] = *splice_;
  j["wall"] = wall_ ? nlohmann::json(*wall_) : nlohmann::json(nullptr);
  return j;
}

BoundStateSet solve_bound_states(const PotentialSource& src, int n_max, const BoundStateOptions& options) {
  if (n_max < 1) throw InvalidInput("n_max must be >= 1");
  double x_min;
  if (src.wall()) {
    x_min = std::log(*src.wall());
  } else if (src.has_table()) {
    x_min = std::log(src.R_lo());
  } else {
    throw PreconditionError("an analytic tail is singular at the origin; attach a hard wall");
  }
  double x_limit;
  if (std::isfinite(src.R_hi())) {
    x_limit = std::log(src.R_hi());
  } else {
    x_limit = std::log(src.tail()->r0) + options.x_cap;
  }
  radial::ShootingOptions so;
  so.step = options.step;
  so.tolerance = options.tolerance;
  radial::Shooter shooter([&src](double x) { return 0.25 + src.reduced(x); }, x_min, x_limit,
                          units::two_mu, so);
  const radial::LevelSet set = shooter.solve(n_max);

  BoundStateSet out;
  out.source = src.describe();
  out.truncated = set.truncated;
  for (const auto& lv : set.levels) {
    BoundState b;
    b.n = lv.index;
    b.E_rel = -std::exp(lv.eta);
    b.E = src.threshold() + b.E_rel;
    b.R_mean = lv.mean_radius;
    b.nodes = lv.nodes;
    b.R_in = std::exp(lv.x_inner);
    b.R_out = std::exp(lv.x_outer);
    if (b.nodes != b.n)
      throw ConvergenceError("state " + std::to_string(b.n) + " has " + std::to_string(b.nodes) + " nodes");
    out.states.push_back(b);
  }
  return out;
}

void write_csv(std::ostream& os, const BoundStateSet& set) {
  os << "n,E,R_mean,nodes,Rin,Rout,truncated\n";
  for (const auto& s : set.states)
    os << s.n << ',' << csv::num(s.E) << ',' << csv::num(s.R_mean) << ',' << s.nodes << ','
       << csv::num(s.R_in) << ',' << csv::num(s.R_out) << ',' << (set.truncated ? 1 : 0) << '\n';
}

}  // namespace trimerlab
