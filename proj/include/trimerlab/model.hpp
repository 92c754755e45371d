#pragma once

// Physical model: units, regularized inverse-square pair potentials,
// symmetry sectors and the democratic hyperangular coordinates.
//
// Units are hbar = m = 1 with lengths measured in the regularization
// scale r0 by default. Three identical particles use the three-body
// reduced mass mu = m / sqrt(3).

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

namespace trimerlab {

namespace units {
inline constexpr double hbar = 1.0;
inline constexpr double mass = 1.0;
/// Three-body reduced mass for identical particles.
inline constexpr double mu = 0.57735026918962576451;  // 1/sqrt(3)
inline constexpr double two_mu = 2.0 * mu;
}  // namespace units

enum class CutoffForm { Sech2, Gaussian, Constant, None };

enum class Statistics { Boson, Fermion };

struct SymmetrySector {
  Statistics statistics = Statistics::Boson;
  int J = 0;
  int parity = +1;

  bool is_boson_0plus() const {
    return statistics == Statistics::Boson && J == 0 && parity == +1;
  }
  bool is_fermion_1plus() const {
    return statistics == Statistics::Fermion && J == 1 && parity == +1;
  }
  bool operator==(const SymmetrySector&) const = default;
};

/// Pair-potential strength, regularization and sector.
struct ModelConfig {
  double alpha2 = 0.0;
  double r0 = 1.0;
  CutoffForm cutoff = CutoffForm::Sech2;
  SymmetrySector sector{};

  /// Throws InvalidInput when alpha2 < -1/4, r0 <= 0 for a regularized form,
  /// or the sector is neither boson 0+ nor fermion 1+.
  void validate() const;

  /// Coefficient alpha^2 + 1/4 in front of -hbar^2/(m D(r)).
  double strength() const { return alpha2 + 0.25; }

  bool operator==(const ModelConfig&) const = default;
};

std::string to_string(CutoffForm c);
CutoffForm cutoff_from_string(const std::string& s);

void to_json(nlohmann::json& j, const SymmetrySector& s);
void from_json(const nlohmann::json& j, SymmetrySector& s);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Overflow-free sech(x)^2.
inline double sech2(double x) {
  const double e = std::exp(-2.0 * std::abs(x));
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

/// Cutoff shape S(x) multiplying r0^2 in the denominator r0^2 S(r/r0) + r^2.
inline double cutoff_shape(CutoffForm form, double x) {
  switch (form) {
    case CutoffForm::Sech2:
      return sech2(x);
    case CutoffForm::Gaussian:
      return std::exp(-x * x);
    case CutoffForm::Constant:
      return 1.0;
    case CutoffForm::None:
      return 0.0;
  }
  return 0.0;
}

/// v(r) = -(alpha^2 + 1/4) hbar^2 / (m D(r)). Throws SingularInput for r = 0 on the pure form.
double pair_potential(double r, const ModelConfig& cfg);

/// A point of the J = 0 hyperangular domain: theta in [0, pi/2], phi in [0, 2 pi).
struct HyperangularPoint {
  double R = 1.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// 1 + sin(theta) cos(phi - 2 pi k / 3) for k = 0, 1, 2, computed without
/// cancellation near the pair-coincidence lines. Input is the complementary
/// polar angle u = pi/2 - theta so that callers holding u exactly keep full
/// relative precision.
std::array<double, 3> shape_factors(double u, double phi);

/// Pair distances r_k = 3^{-1/4} R sqrt(1 + sin(theta) cos(phi - 2 pi k/3)).
std::array<double, 3> pair_distances(const HyperangularPoint& p);

/// Sum of the three pair potentials at a hyperangular point.
double total_potential(const HyperangularPoint& p, const ModelConfig& cfg);

/// 2 mu R^2 V as a function of shape factors t_k (dimensionless; depends
/// on R only through r0/R). This is the form used by the hyperangular solver.
double reduced_total_potential(const std::array<double, 3>& t, double R_over_r0,
                               const ModelConfig& cfg);

}  // namespace trimerlab
