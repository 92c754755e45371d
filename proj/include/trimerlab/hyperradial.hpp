#pragma once

// Single-channel hyperradial bound states,
//
//   -(hbar^2 / 2 mu) F'' + W(R) F = E F,
//
// on tabulated or analytic potentials with an optional hard wall.

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trimerlab/hyperangular.hpp"
#include "trimerlab/model.hpp"

namespace trimerlab {

enum class TailForm { SubcriticalLog, PureInverseSquare, SupercriticalThreshold, FermionLog };

std::string to_string(TailForm f);
TailForm tail_form_from_string(const std::string& s);

/// Analytic asymptotic forms, all written as W = E_th - C(R) hbar^2 / (2 mu R^2):
///   subcritical-log:          C = sqrt(beta ln(R/r0) + delta), E_th = 0
///   pure-inverse-square:      C = alpha_nu2 + 1/4,             E_th = 0
///   supercritical-threshold:  C = alpha_eff2 + 1/4,            E_th given
///   fermion-log:              C = alpha_eff2 + 1/4 + gamma / ln(R/r0), E_th = 0
/// A nonzero E_th on the other forms offsets the whole tail.
struct ModelTail {
  TailForm form = TailForm::SubcriticalLog;
  double beta = 0.0, delta = 0.0;
  double alpha_nu2 = 0.0;
  double alpha_eff2 = 0.0, gamma = 0.0;
  double E_th = 0.0;
  double r0 = 1.0;

  /// 2 mu R^2 (W - E_th) / hbar^2 at x = ln R; throws DomainError where the form is undefined.
  double reduced(double x) const;
  double threshold() const { return E_th; }
};

void to_json(nlohmann::json& j, const ModelTail& t);
void from_json(const nlohmann::json& j, ModelTail& t);

/// A hyperradial potential: a table channel or an analytic tail, optionally
/// spliced (table below the splice radius, tail above) and walled.
class PotentialSource {
 public:
  /// Tabulated W samples (ascending R). Interpolation is monotone cubic in
  /// (ln R, ln|W|) when every sample is negative, otherwise in (ln R, 2 mu R^2 W).
  static PotentialSource table(std::vector<double> R, std::vector<double> W, double E_th = 0.0,
                               nlohmann::json provenance = {});
  static PotentialSource table(const ChannelTable& t, int channel, double E_th = 0.0);
  static PotentialSource model(const ModelTail& tail);

  PotentialSource with_wall(double R_wall) const;
  /// Uses `tail` for R >= R_splice; R_splice must lie inside the table range.
  PotentialSource with_tail(const ModelTail& tail, double R_splice) const;

  /// W(R); DomainError outside [R_lo, R_hi].
  double W(double R) const;
  /// 2 mu R^2 (W - E_th) at x = ln R.
  double reduced(double x) const;
  double threshold() const { return E_th_; }
  double R_lo() const;
  double R_hi() const;
  std::optional<double> wall() const { return wall_; }
  bool has_table() const { return table_ != nullptr; }
  const std::optional<ModelTail>& tail() const { return tail_; }
  nlohmann::json describe() const;

 private:
  struct Table;
  std::shared_ptr<const Table> table_;
  std::optional<ModelTail> tail_;
  std::optional<double> splice_;
  std::optional<double> wall_;
  double E_th_ = 0.0;
};

struct BoundState {
  int n = 0;
  double E = 0.0;
  /// E minus the source threshold (kept separately: it may be far below |E| in size).
  double E_rel = 0.0;
  double R_mean = 0.0;
  int nodes = 0;
  double R_in = 0.0, R_out = 0.0;
};

struct BoundStateSet {
  nlohmann::json source;
  std::vector<BoundState> states;
  /// More states may exist beyond the representable or searched domain.
  bool truncated = false;
};

struct BoundStateOptions {
  double tolerance = 1e-8;
  double step = 0.004;
  /// Upper x = ln(R / r0) limit for analytic tails.
  double x_cap = 600.0;
};

/// Lowest n_max bound states below the source threshold.
BoundStateSet solve_bound_states(const PotentialSource& src, int n_max,
                                 const BoundStateOptions& options = {});

void write_csv(std::ostream& os, const BoundStateSet& set);

}  // namespace trimerlab
