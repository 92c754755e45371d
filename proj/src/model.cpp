#include "trimerlab/model.hpp"

#include <numbers>

#include "trimerlab/error.hpp"

namespace trimerlab {

namespace {
constexpr double kThreeQuarterRoot = 0.75983568565159254;  // 3^{-1/4}
constexpr double kSqrt3 = 1.7320508075688772935;
}  // namespace

void ModelConfig::validate() const {
  if (!std::isfinite(alpha2) || alpha2 < -0.25)
    throw InvalidInput("alpha2 must satisfy alpha2 >= -1/4, got " + std::to_string(alpha2));
  if (cutoff != CutoffForm::None && !(r0 > 0.0 && std::isfinite(r0)))
    throw InvalidInput("r0 must be positive for a regularized potential");
  if (!sector.is_boson_0plus() && !sector.is_fermion_1plus())
    throw InvalidInput("sector must be boson 0+ or fermion 1+");
}

std::string to_string(CutoffForm c) {
  switch (c) {
    case CutoffForm::Sech2:
      return "sech2";
    case CutoffForm::Gaussian:
      return "gaussian";
    case CutoffForm::Constant:
      return "constant";
    case CutoffForm::None:
      return "none";
  }
  return "none";
}

CutoffForm cutoff_from_string(const std::string& s) {
  if (s == "sech2") return CutoffForm::Sech2;
  if (s == "gaussian") return CutoffForm::Gaussian;
  if (s == "constant") return CutoffForm::Constant;
  if (s == "none") return CutoffForm::None;
  throw InvalidInput("unknown cutoff form '" + s + "'");
}

void to_json(nlohmann::json& j, const SymmetrySector& s) {
  j = nlohmann::json{{"statistics", s.statistics == Statistics::Boson ? "boson" : "fermion"},
                     {"J", s.J},
                     {"parity", s.parity}};
}

void from_json(const nlohmann::json& j, SymmetrySector& s) {
  const auto stat = j.at("statistics").get<std::string>();
  if (stat == "boson")
    s.statistics = Statistics::Boson;
  else if (stat == "fermion")
    s.statistics = Statistics::Fermion;
  else
    throw InvalidInput("unknown statistics '" + stat + "'");
  s.J = j.at("J").get<int>();
  s.parity = j.at("parity").get<int>();
  if (s.J < 0) throw InvalidInput("J must be non-negative");
  if (s.parity != 1 && s.parity != -1) throw InvalidInput("parity must be +1 or -1");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"alpha2", c.alpha2},
                     {"r0", c.r0},
                     {"cutoff", to_string(c.cutoff)},
                     {"sector", c.sector}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  try {
    c.alpha2 = j.at("alpha2").get<double>();
    c.r0 = j.value("r0", 1.0);
    c.cutoff = cutoff_from_string(j.value("cutoff", std::string("sech2")));
    if (j.contains("sector")) c.sector = j.at("sector").get<SymmetrySector>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed model config: ") + e.what());
  }
}

double pair_potential(double r, const ModelConfig& cfg) {
  if (r < 0.0) throw InvalidInput("pair distance must be non-negative");
  double denom;
  if (cfg.cutoff == CutoffForm::None) {
    if (r == 0.0) throw SingularInput("pure inverse-square potential is singular at r = 0");
    denom = r * r;
  } else {
    denom = cfg.r0 * cfg.r0 * cutoff_shape(cfg.cutoff, r / cfg.r0) + r * r;
  }
  return -cfg.strength() * units::hbar * units::hbar / (units::mass * denom);
}

std::array<double, 3> shape_factors(double u, double phi) {
  // 1 + cos(u) cos(psi) = 2 sin^2(u/2) + cos(u) * 2 sin^2(d/2) with d = pi - |psi|,
  // psi reduced to [-pi, pi]. Both terms are non-negative.
  const double su = std::sin(0.5 * u);
  const double cu = std::cos(u);
  std::array<double, 3> t{};
  for (int k = 0; k < 3; ++k) {
    const double psi = std::remainder(phi - 2.0 * std::numbers::pi * k / 3.0, 2.0 * std::numbers::pi);
    const double d = std::numbers::pi - std::abs(psi);
    const double sd = std::sin(0.5 * d);
    t[k] = 2.0 * su * su + 2.0 * cu * sd * sd;
  }
  return t;
}

std::array<double, 3> pair_distances(const HyperangularPoint& p) {
  const auto t = shape_factors(0.5 * std::numbers::pi - p.theta, p.phi);
  std::array<double, 3> r{};
  for (int k = 0; k < 3; ++k) r[k] = kThreeQuarterRoot * p.R * std::sqrt(t[k]);
  return r;
}

double total_potential(const HyperangularPoint& p, const ModelConfig& cfg) {
  double v = 0.0;
  for (double r : pair_distances(p)) v += pair_potential(r, cfg);
  return v;
}

double reduced_total_potential(const std::array<double, 3>& t, double R_over_r0,
                               const ModelConfig& cfg) {
  const double g = cfg.strength();
  if (g == 0.0) return 0.0;
  double sum = 0.0;
  if (cfg.cutoff == CutoffForm::None) {
    for (double tk : t) {
      if (tk == 0.0) throw SingularInput("pure inverse-square potential is singular at coincidence");
      sum += 2.0 / tk;
    }
  } else {
    const double eps2 = kSqrt3 / (R_over_r0 * R_over_r0);
    for (double tk : t) {
      const double x = kThreeQuarterRoot * std::sqrt(tk) * R_over_r0;
      sum += 2.0 / (tk + eps2 * cutoff_shape(cfg.cutoff, x));
    }
  }
  return -g * sum;
}

}  // namespace trimerlab
