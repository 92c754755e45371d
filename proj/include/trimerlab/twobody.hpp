#pragma once

// Radial two-body problem with reduced mass m/2:
//
//   -u'' + [l(l+1)/r^2 + v(r)] u = E u      (hbar = m = 1)
//
// solved by log-space shooting, one node-count bracket per level.

#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "trimerlab/model.hpp"

namespace trimerlab {

/// v(r) + l(l+1) hbar^2 / (m r^2).
double radial_effective_potential(double r, const ModelConfig& cfg, int l);

struct TwoBodyLevel {
  int v = 0;
  double E = 0.0;
  double r_mean = 0.0;
  int nodes = 0;
  double r_inner = 0.0, r_outer = 0.0;
};

struct TwoBodyOptions {
  double tolerance = 1e-9;
  double step = 0.004;
};

struct TwoBodyLevels {
  ModelConfig cfg;
  int l = 0;
  double r_min = 0.0, r_max = 0.0;
  TwoBodyOptions options;
  std::vector<TwoBodyLevel> levels;
};

/// Default radial domain [1e-6 r0, 1e12 r0].
struct RadialDomain {
  double r_min = 1e-6;
  double r_max = 1e12;
};

/// Lowest n_levels bound states. The count returned is limited by the
/// domain, not physics: an attractive supercritical tail holds infinitely
/// many levels. Empty when the effective coefficient is subcritical.
/// Throws PreconditionError for the pure form and DomainError when the
/// shallowest requested level does not fit inside r_max.
TwoBodyLevels solve_two_body(const ModelConfig& cfg, int l, int n_levels,
                             RadialDomain domain = {}, const TwoBodyOptions& options = {});

/// Lowest dimer (v = 0) on the domain [1e-6 r0, 1e200 r0]; empty when none exists.
std::optional<TwoBodyLevel> lowest_dimer(const ModelConfig& cfg, int l = 0);

/// Lowest dimer threshold E_{0l}, or 0 when no dimer exists.
double lowest_threshold(const ModelConfig& cfg, int l = 0);

void write_csv(std::ostream& os, const TwoBodyLevels& levels);
nlohmann::json sidecar(const TwoBodyLevels& levels);

}  // namespace trimerlab
