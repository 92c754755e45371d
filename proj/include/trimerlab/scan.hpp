#pragma once

// Lowest three-body energies as a function of alpha^2, each from the W_00
// channel of a tabulated run completed by a fitted asymptotic tail.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trimerlab/analysis.hpp"
#include "trimerlab/hyperangular.hpp"
#include "trimerlab/hyperradial.hpp"

namespace trimerlab {

/// Default subcritical fit window: from one decade above the last sign
/// change of W to the end of the table. Empty when W never turns negative
/// or the negative stretch spans less than one decade.
std::optional<FitWindow> subcritical_window(const std::vector<double>& R, const std::vector<double>& W);

struct ScanOptions {
  /// Hard wall, in units of r0.
  double wall = 100.0;
  int n_states = 4;
  double per_decade = 4.0;
  /// Table end for alpha^2 <= 0, in units of r0.
  double subcritical_R_max = 1e9;
  /// Threshold-tail fit window in units of the dimer radius <r>_00.
  double threshold_window_lo = 10.0, threshold_window_hi = 100.0;
  /// Largest hyperradius (units of r0) trusted in a table.
  double R_cap = 1e10;
  MeshPolicy policy{};
  ChannelTableOptions table{};
  BoundStateOptions bound{};
};

using TableProvider =
    std::function<ChannelTable(const ModelConfig& cfg, const std::vector<double>& R_grid, int n_channels)>;

struct ScanRow {
  double alpha2 = 0.0;
  /// Lowest dimer threshold and its mean radius (alpha^2 > 0 only).
  std::optional<double> E00, dimer_radius;
  std::vector<BoundState> states;
  bool truncated = false;
  std::optional<TailFit> tail_fit;
  std::optional<double> R_splice;
  /// Empty on success; otherwise why this alpha^2 produced no result.
  std::string error;
  nlohmann::json source;
};

/// Potential source used for one alpha^2: table channel 0 with the tail
/// spliced on and the wall attached. Fills the tail/threshold fields of `row`.
PotentialSource scan_source(const ChannelTable& table, const ModelConfig& cfg,
                            const ScanOptions& options, ScanRow& row);

/// Table grid used for one alpha^2 (units of length, r0 applied).
std::vector<double> scan_grid(const ModelConfig& cfg, const ScanOptions& options,
                              std::optional<double> dimer_radius);

/// Runs every alpha^2 (ascending); failures are recorded per row.
std::vector<ScanRow> spectrum_scan(const ModelConfig& base, const std::vector<double>& alpha2,
                                   const ScanOptions& options = {}, const TableProvider& tables = {});

/// scan.csv: alpha2,n,E,E_rel,E00,R_mean,nodes,truncated,status
void write_csv(std::ostream& os, const std::vector<ScanRow>& rows);
nlohmann::json to_json(const std::vector<ScanRow>& rows);

}  // namespace trimerlab
