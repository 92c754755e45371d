#include "trimerlab/hyperangular.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <limits>
#include <cmath>
#include <numbers>
#include <thread>

#include "trimerlab/csv.hpp"
#include "trimerlab/error.hpp"

namespace trimerlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWidthFactor = 1.8612097182041991;  // sqrt(2) * 3^{1/4}

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// Shape factors 1 + sin(theta) cos(phi - 2 pi k/3) at mesh coordinates.
std::array<double, 3> mesh_shape_factors(AngularDomain domain, double u, double v) {
  if (domain == AngularDomain::Full) return shape_factors(u, v);
  // Reduced domain: v = w = pi/3 - phi; pair 2 coincides at u = w = 0.
  auto t = shape_factors(u, kPi / 3.0 - v);
  const double su = std::sin(0.5 * u), sw = std::sin(0.5 * v);
  t[2] = 2.0 * su * su + 2.0 * std::cos(u) * sw * sw;
  return t;
}

struct Quadrature1D {
  std::vector<double> x, w;  // physical points and weights, element-major
  int per_element = 0;
};

Quadrature1D element_quadrature(const fe::Mesh1D& mesh, const fe::ReferenceElement& ref) {
  Quadrature1D q;
  q.per_element = ref.n_quad();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double a = mesh.edges[e], b = mesh.edges[e + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int k = 0; k < ref.n_quad(); ++k) {
      q.x.push_back(mid + half * ref.quad_points()[k]);
      q.w.push_back(half * ref.quad_weights()[k]);
    }
  }
  return q;
}

// Values of all channel functions at (u, v).
void evaluate_all(const AngularMesh& mesh, const fe::ReferenceElement& ref, const MatrixXd& c,
                  double u, double v, double* out) {
  const int nb = ref.n_basis();
  const int eu = mesh.u.locate(u), ev = mesh.v.locate(v);
  const double ua = mesh.u.edges[eu], ub = mesh.u.edges[eu + 1];
  const double va = mesh.v.edges[ev], vb = mesh.v.edges[ev + 1];
  std::vector<double> nu(nb), nv(nb);
  ref.evaluate((2.0 * u - ua - ub) / (ub - ua), nu.data());
  ref.evaluate((2.0 * v - va - vb) / (vb - va), nv.data());
  const int n_u = mesh.u.n_nodes(), n_v = mesh.v.n_nodes();
  const int pole = (n_u - 1) * n_v;
  for (Eigen::Index k = 0; k < c.cols(); ++k) out[k] = 0.0;
  for (int a = 0; a < nb; ++a) {
    const int iu = mesh.u.global_node(eu, a);
    for (int b = 0; b < nb; ++b) {
      const int iv = mesh.v.global_node(ev, b);
      const int g = iu == n_u - 1 ? pole : iu * n_v + iv;
      const double phi = nu[a] * nv[b];
      for (Eigen::Index k = 0; k < c.cols(); ++k) out[k] += phi * c(g, k);
    }
  }
}

// Overlaps <f_i | g_j> with f on mesh A and g on mesh B, using B's quadrature.
MatrixXd cross_overlap_impl(const AngularMesh& A, const MatrixXd& fa, const AngularMesh& B,
                            const MatrixXd& gb) {
  const fe::ReferenceElement refA(A.u.order, A.quadrature_points);
  const fe::ReferenceElement refB(B.u.order, B.quadrature_points);
  const auto qu = element_quadrature(B.u, refB);
  const auto qv = element_quadrature(B.v, refB);
  MatrixXd out = MatrixXd::Zero(fa.cols(), gb.cols());
  std::vector<double> va(fa.cols()), vb(gb.cols());
  for (std::size_t i = 0; i < qu.x.size(); ++i) {
    const double wu = qu.w[i] * std::sin(2.0 * qu.x[i]);
    for (std::size_t j = 0; j < qv.x.size(); ++j) {
      evaluate_all(A, refA, fa, qu.x[i], qv.x[j], va.data());
      evaluate_all(B, refB, gb, qu.x[i], qv.x[j], vb.data());
      const double w = wu * qv.w[j];
      for (Eigen::Index a = 0; a < fa.cols(); ++a)
        for (Eigen::Index b = 0; b < gb.cols(); ++b) out(a, b) += w * va[a] * vb[b];
    }
  }
  return out;
}

void normalize_sign(MatrixXd& vecs) {
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    Eigen::Index imax = 0;
    vecs.col(k).cwiseAbs().maxCoeff(&imax);
    if (vecs(imax, k) < 0) vecs.col(k) *= -1.0;
  }
}

void require_solver_sector(const ModelConfig& cfg) {
  if (!cfg.sector.is_boson_0plus())
    throw UnsupportedSector(
        "the hyperangular solver supports only bosons with J^Pi = 0+; the requested sector is "
        "limited to analysis operations");
}

}  // namespace

void to_json(nlohmann::json& j, const MeshPolicy& p) {
  j = nlohmann::json{{"order", p.order},
                     {"core_elements", p.core_elements},
                     {"elements_per_decade", p.elements_per_decade},
                     {"far_element", p.far_element},
                     {"extra_quadrature", p.extra_quadrature},
                     {"pure_width", p.pure_width},
                     {"min_nodes_across_width", p.min_nodes_across_width}};
}

void from_json(const nlohmann::json& j, MeshPolicy& p) {
  p.order = j.value("order", p.order);
  p.core_elements = j.value("core_elements", p.core_elements);
  p.elements_per_decade = j.value("elements_per_decade", p.elements_per_decade);
  p.far_element = j.value("far_element", p.far_element);
  p.extra_quadrature = j.value("extra_quadrature", p.extra_quadrature);
  p.pure_width = j.value("pure_width", p.pure_width);
  p.min_nodes_across_width = j.value("min_nodes_across_width", p.min_nodes_across_width);
}

double regularized_width(double R_over_r0) { return kWidthFactor / R_over_r0; }

AngularMesh make_mesh(const MeshPolicy& policy, double R_over_r0, CutoffForm cutoff) {
  AngularMesh mesh;
  mesh.domain = AngularDomain::Reduced;
  mesh.quadrature_points = policy.order + policy.extra_quadrature;
  mesh.width = cutoff == CutoffForm::None ? policy.pure_width : regularized_width(R_over_r0);
  mesh.u.order = mesh.v.order = policy.order;
  mesh.u.edges = fe::graded_edges(kPi / 2.0, mesh.width, policy.core_elements,
                                  policy.elements_per_decade, policy.far_element);
  mesh.v.edges = fe::graded_edges(kPi / 3.0, mesh.width, policy.core_elements,
                                  policy.elements_per_decade, policy.far_element);
  return mesh;
}

AngularMesh make_uniform_mesh(int order, int u_elements, int w_elements) {
  AngularMesh mesh;
  mesh.quadrature_points = order + 3;
  mesh.u.order = mesh.v.order = order;
  for (int i = 0; i <= u_elements; ++i) mesh.u.edges.push_back(kPi / 2.0 * i / u_elements);
  for (int i = 0; i <= w_elements; ++i) mesh.v.edges.push_back(kPi / 3.0 * i / w_elements);
  return mesh;
}

AngularMesh mirror_to_full_domain(const AngularMesh& reduced) {
  if (reduced.domain != AngularDomain::Reduced) throw InvalidInput("mesh is already full-domain");
  AngularMesh full = reduced;
  full.domain = AngularDomain::Full;
  full.v.periodic = true;
  // phi = pi/3 - w on [0, pi/3]; mirror sector by sector about multiples of pi/3.
  std::vector<double> sector;
  for (auto it = reduced.v.edges.rbegin(); it != reduced.v.edges.rend(); ++it)
    sector.push_back(kPi / 3.0 - *it);
  sector.front() = 0.0;
  sector.back() = kPi / 3.0;
  std::vector<double> edges{0.0};
  for (int s = 0; s < 6; ++s) {
    const double base = s * kPi / 3.0;
    for (std::size_t i = 1; i < sector.size(); ++i) {
      const double x = (s % 2 == 0) ? sector[i] : kPi / 3.0 - sector[sector.size() - 1 - i];
      edges.push_back(base + x);
    }
  }
  edges.back() = 2.0 * kPi;
  full.v.edges = edges;
  return full;
}

void check_resolution(const AngularMesh& mesh, double R_over_r0, const ModelConfig& cfg,
                      int min_nodes) {
  if (cfg.cutoff == CutoffForm::None || cfg.strength() == 0.0) return;
  const double width = regularized_width(R_over_r0);
  const fe::ReferenceElement ref(mesh.u.order, mesh.quadrature_points);
  auto count = [&](const fe::Mesh1D& m, double origin_dist(double)) {
    int n = 0;
    for (double x : m.node_coordinates(ref))
      if (origin_dist(x) <= width) ++n;
    return n;
  };
  const int nu = count(mesh.u, [](double x) { return x; });
  const int nv = mesh.domain == AngularDomain::Reduced
                     ? count(mesh.v, [](double x) { return x; })
                     : count(mesh.v, [](double x) { return std::abs(x - kPi / 3.0); });
  if (nu < min_nodes || nv < min_nodes)
    throw MeshResolutionError("regularized region of angular width " + std::to_string(width) +
                              " resolved by only " + std::to_string(std::min(nu, nv)) +
                              " nodes (need " + std::to_string(min_nodes) + ") at R/r0 = " +
                              std::to_string(R_over_r0));
}

nlohmann::json describe(const AngularMesh& mesh) {
  return nlohmann::json{{"domain", mesh.domain == AngularDomain::Reduced ? "reduced" : "full"},
                        {"order", mesh.u.order},
                        {"u_elements", mesh.u.n_elements()},
                        {"v_elements", mesh.v.n_elements()},
                        {"dofs", mesh.n_dofs()},
                        {"width", mesh.width},
                        {"smallest_u_element", mesh.u.edges[1] - mesh.u.edges[0]}};
}

AngularOperator::AngularOperator(AngularMesh mesh)
    : mesh_(std::move(mesh)), ref_(mesh_.u.order, mesh_.quadrature_points) {
  if (mesh_.u.order != mesh_.v.order) throw InvalidInput("mesh directions must share the element order");
  u_nodes_ = mesh_.u.node_coordinates(ref_);
  v_nodes_ = mesh_.v.node_coordinates(ref_);

  const int nb = ref_.n_basis(), nq = ref_.n_quad();
  const int n_u = mesh_.u.n_nodes(), n_v = mesh_.v.n_nodes();

  // 1D matrices: Au = int 4 N' N' sin2u, Bu = int N N sin2u, Cu = int 8 tan(u) N N,
  // Mv = int M M, Dv = int M' M'.
  std::vector<Triplet> Au, Bu, Cu, Mv, Dv;
  for (int e = 0; e < mesh_.u.n_elements(); ++e) {
    const double a = mesh_.u.edges[e], b = mesh_.u.edges[e + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int q = 0; q < nq; ++q) {
      const double u = mid + half * ref_.quad_points()[q];
      const double w = half * ref_.quad_weights()[q];
      const double s2 = std::sin(2.0 * u), tn = std::tan(u);
      const double* N = &ref_.shape()[q * nb];
      const double* dN = &ref_.shape_derivative()[q * nb];
      for (int i = 0; i < nb; ++i)
        for (int k = 0; k < nb; ++k) {
          const int gi = mesh_.u.global_node(e, i), gk = mesh_.u.global_node(e, k);
          Au.emplace_back(gi, gk, w * 4.0 * s2 * dN[i] * dN[k] / (half * half));
          Bu.emplace_back(gi, gk, w * s2 * N[i] * N[k]);
          if (gi != n_u - 1 && gk != n_u - 1) Cu.emplace_back(gi, gk, w * 8.0 * tn * N[i] * N[k]);
        }
    }
  }
  for (int e = 0; e < mesh_.v.n_elements(); ++e) {
    const double a = mesh_.v.edges[e], b = mesh_.v.edges[e + 1];
    const double half = 0.5 * (b - a);
    for (int q = 0; q < nq; ++q) {
      const double w = half * ref_.quad_weights()[q];
      const double* N = &ref_.shape()[q * nb];
      const double* dN = &ref_.shape_derivative()[q * nb];
      for (int i = 0; i < nb; ++i)
        for (int k = 0; k < nb; ++k) {
          const int gi = mesh_.v.global_node(e, i), gk = mesh_.v.global_node(e, k);
          Mv.emplace_back(gi, gk, w * N[i] * N[k]);
          Dv.emplace_back(gi, gk, w * dN[i] * dN[k] / (half * half));
        }
    }
  }
  auto build = [](int n, const std::vector<Triplet>& t) {
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  };
  const SparseMatrix A = build(n_u, Au), B = build(n_u, Bu), C = build(n_u, Cu);
  const SparseMatrix Mm = build(n_v, Mv), D = build(n_v, Dv);

  std::vector<Triplet> ks, ms;
  auto kron = [&](const SparseMatrix& X, const SparseMatrix& Y, std::vector<Triplet>& out) {
    for (int cx = 0; cx < X.outerSize(); ++cx)
      for (SparseMatrix::InnerIterator itx(X, cx); itx; ++itx)
        for (int cy = 0; cy < Y.outerSize(); ++cy)
          for (SparseMatrix::InnerIterator ity(Y, cy); ity; ++ity)
            out.emplace_back(dof(static_cast<int>(itx.row()), static_cast<int>(ity.row())),
                             dof(static_cast<int>(itx.col()), static_cast<int>(ity.col())),
                             itx.value() * ity.value());
  };
  kron(A, Mm, ks);
  kron(C, D, ks);
  kron(B, Mm, ms);
  const int n = mesh_.n_dofs();
  stiffness_ = build(n, ks);
  mass_ = build(n, ms);
}

int AngularOperator::dof(int iu, int iv) const {
  const int n_u = mesh_.u.n_nodes(), n_v = mesh_.v.n_nodes();
  return iu == n_u - 1 ? (n_u - 1) * n_v : iu * n_v + iv;
}

SparseMatrix AngularOperator::potential(double R, const ModelConfig& cfg, double* minimum) const {
  const int nb = ref_.n_basis(), nq = ref_.n_quad();
  const double R_over_r0 = cfg.cutoff == CutoffForm::None ? 1.0 : R / cfg.r0;
  const auto qu = element_quadrature(mesh_.u, ref_);
  const auto qv = element_quadrature(mesh_.v, ref_);
  const int neu = mesh_.u.n_elements(), nev = mesh_.v.n_elements();

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(neu) * nev * nb * nb * nb * nb);
  std::vector<double> G(nq * nq), T(nb * nb * nq);
  double vmin = 0.0;
  for (int eu = 0; eu < neu; ++eu) {
    for (int ev = 0; ev < nev; ++ev) {
      for (int q = 0; q < nq; ++q) {
        const double u = qu.x[eu * nq + q];
        const double wu = qu.w[eu * nq + q] * std::sin(2.0 * u);
        for (int r = 0; r < nq; ++r) {
          const double v = qv.x[ev * nq + r];
          const double val =
              reduced_total_potential(mesh_shape_factors(mesh_.domain, u, v), R_over_r0, cfg);
          vmin = std::min(vmin, val);
          G[q * nq + r] = val * wu * qv.w[ev * nq + r];
        }
      }
      // T(a, c, r) = sum_q N_a N_c G(q, r)
      std::fill(T.begin(), T.end(), 0.0);
      for (int q = 0; q < nq; ++q) {
        const double* N = &ref_.shape()[q * nb];
        for (int a = 0; a < nb; ++a)
          for (int c = 0; c < nb; ++c) {
            const double nn = N[a] * N[c];
            double* t = &T[(a * nb + c) * nq];
            for (int r = 0; r < nq; ++r) t[r] += nn * G[q * nq + r];
          }
      }
      for (int a = 0; a < nb; ++a) {
        const int iu_a = mesh_.u.global_node(eu, a);
        for (int c = 0; c < nb; ++c) {
          const int iu_c = mesh_.u.global_node(eu, c);
          const double* t = &T[(a * nb + c) * nq];
          for (int b = 0; b < nb; ++b) {
            const int gb = dof(iu_a, mesh_.v.global_node(ev, b));
            for (int d = 0; d < nb; ++d) {
              double s = 0.0;
              for (int r = 0; r < nq; ++r) {
                const double* M = &ref_.shape()[r * nb];
                s += t[r] * M[b] * M[d];
              }
              trip.emplace_back(gb, dof(iu_c, mesh_.v.global_node(ev, d)), s);
            }
          }
        }
      }
    }
  }
  SparseMatrix P(n_dofs(), n_dofs());
  P.setFromTriplets(trip.begin(), trip.end());
  if (minimum) *minimum = vmin;
  return P;
}

double AngularOperator::evaluate(const VectorXd& c, double u, double v) const {
  double out = 0.0;
  MatrixXd cm = c;
  evaluate_all(mesh_, ref_, cm, u, v, &out);
  return out;
}

MatrixXd AngularOperator::cross_overlap(const AngularOperator& other, const MatrixXd& other_coeffs,
                                        const MatrixXd& coeffs) const {
  return cross_overlap_impl(other.mesh(), other_coeffs, mesh_, coeffs);
}

AdiabaticSolution adiabatic_solve(double R, const ModelConfig& cfg, const AngularOperator& op,
                                  int n_channels, const AdiabaticSolveOptions& options) {
  cfg.validate();
  require_solver_sector(cfg);
  if (n_channels < 1) throw InvalidInput("n_channels must be >= 1");
  if (!(R > 0)) throw InvalidInput("hyperradius must be positive");
  const double R_over_r0 = cfg.cutoff == CutoffForm::None ? 1.0 : R / cfg.r0;
  check_resolution(op.mesh(), R_over_r0, cfg, 8);

  double vmin = 0.0;
  const SparseMatrix P = op.potential(R, cfg, &vmin);
  const SparseMatrix K = op.stiffness() + P;
  EigenResult eig = lowest_eigenpairs(K, op.mass(), n_channels, vmin, options.estimate, options.lanczos);
  AdiabaticSolution sol;
  sol.R = R;
  sol.lambda = eig.values;
  sol.channels = std::move(eig.vectors);
  sol.residuals = eig.residuals;
  sol.error_bounds = eig.error_bounds;
  normalize_sign(sol.channels);
  return sol;
}

AdiabaticSolution adiabatic_solve(double R, const ModelConfig& cfg, const AngularMesh& mesh,
                                  int n_channels, const AdiabaticSolveOptions& options) {
  require_solver_sector(cfg);
  const AngularOperator op(mesh);
  return adiabatic_solve(R, cfg, op, n_channels, options);
}

namespace {

// Q for every computed channel at R; NaN where the overlap match fails.
DiagonalCorrection diagonal_correction_all(double R, double dlnR, const ModelConfig& cfg,
                                           const AngularOperator& op, int n,
                                           const AdiabaticSolveOptions& options) {
  if (!(dlnR > 0)) throw InvalidInput("dlnR must be positive");
  DiagonalCorrection dc;
  dc.center = adiabatic_solve(R, cfg, op, n, options);
  AdiabaticSolveOptions side = options;
  side.estimate = dc.center.lambda[0] * std::exp(2.0 * dlnR) - 1.0;
  const double Rm = R * std::exp(-dlnR), Rp = R * std::exp(dlnR);
  const AdiabaticSolution minus = adiabatic_solve(Rm, cfg, op, n, side);
  const AdiabaticSolution plus = adiabatic_solve(Rp, cfg, op, n, side);
  const MatrixXd Mc = op.mass() * dc.center.channels;
  const MatrixXd om = minus.channels.transpose() * Mc;  // [side index][center index]
  const MatrixXd op_ = plus.channels.transpose() * Mc;
  dc.Q.assign(n, std::numeric_limits<double>::quiet_NaN());
  dc.overlap_minus.assign(n, 0.0);
  dc.overlap_plus.assign(n, 0.0);
  for (int nu = 0; nu < n; ++nu) {
    Eigen::Index im = 0, ip = 0;
    const double bm = om.col(nu).cwiseAbs().maxCoeff(&im);
    const double bp = op_.col(nu).cwiseAbs().maxCoeff(&ip);
    dc.overlap_minus[nu] = bm;
    dc.overlap_plus[nu] = bp;
    if (bm < 0.5 || bp < 0.5) continue;
    const VectorXd fm = minus.channels.col(im) * (om(im, nu) < 0 ? -1.0 : 1.0);
    const VectorXd fp = plus.channels.col(ip) * (op_(ip, nu) < 0 ? -1.0 : 1.0);
    const VectorXd diff = fp - fm;
    const double norm2 = diff.dot(op.mass() * diff);
    const double dR = Rp - Rm;
    dc.Q[nu] = norm2 / (dR * dR) / units::two_mu;
  }
  return dc;
}

}  // namespace

DiagonalCorrection diagonal_correction(double R, double dlnR, const ModelConfig& cfg,
                                       const AngularOperator& op, int n_channels,
                                       const AdiabaticSolveOptions& options) {
  DiagonalCorrection dc = diagonal_correction_all(R, dlnR, cfg, op, n_channels, options);
  for (int nu = 0; nu < n_channels; ++nu)
    if (std::isnan(dc.Q[nu])) {
      const double ov = std::min(dc.overlap_minus[nu], dc.overlap_plus[nu]);
      throw RelabelingError("channel " + std::to_string(nu) + " lost at R = " + std::to_string(R) +
                                " (overlap " + std::to_string(ov) +
                                "): channel crossing within the difference step",
                            R, ov);
    }
  return dc;
}

double diagonal_correction(double R, double dlnR, const ModelConfig& cfg, const AngularMesh& mesh,
                           int nu) {
  require_solver_sector(cfg);
  const AngularOperator op(mesh);
  return diagonal_correction(R, dlnR, cfg, op, nu + 1).Q[nu];
}

double accuracy_target(double R_over_r0) {
  if (R_over_r0 <= 1e5) return 1e-6;
  if (R_over_r0 >= 1e7) return 1e-3;
  const double t = (std::log10(R_over_r0) - 5.0) / 2.0;
  return std::pow(10.0, -6.0 + 3.0 * t);
}

std::vector<double> log_grid(double R_min, double R_max, double per_decade) {
  if (!(R_min > 0) || !(R_max >= R_min) || !(per_decade > 0))
    throw InvalidInput("invalid log grid bounds");
  const double decades = std::log10(R_max / R_min);
  const int n = std::max(1, static_cast<int>(std::llround(decades * per_decade)));
  std::vector<double> R(n + 1);
  for (int i = 0; i <= n; ++i) R[i] = R_min * std::pow(10.0, decades * i / n);
  R.back() = R_max;
  return R;
}

namespace {

struct SampleResult {
  VectorXd lambda;
  std::vector<double> Q, overlap;
  VectorXd error_bounds;
  nlohmann::json diag;
};

struct BlockResult {
  std::vector<SampleResult> samples;
  std::vector<MatrixXd> step_overlap;  // between consecutive samples inside the block
  AngularMesh first_mesh, last_mesh;
  MatrixXd first_channels, last_channels;
};

BlockResult solve_block(const ModelConfig& cfg, const std::vector<double>& R, std::size_t begin,
                        std::size_t end, int n_total, const MeshPolicy& policy,
                        const ChannelTableOptions& options) {
  BlockResult block;
  AdiabaticSolveOptions solve_opt;
  solve_opt.lanczos = options.lanczos;
  std::optional<AngularMesh> prev_mesh;
  MatrixXd prev_channels;
  for (std::size_t i = begin; i < end; ++i) {
    const double R_over_r0 = cfg.cutoff == CutoffForm::None ? R[i] : R[i] / cfg.r0;
    AngularMesh mesh = make_mesh(policy, R_over_r0, cfg.cutoff);
    const AngularOperator op(mesh);
    DiagonalCorrection dc;
    try {
      dc = diagonal_correction_all(R[i], options.dlnR, cfg, op, n_total, solve_opt);
    } catch (const Error& e) {
      throw ConvergenceError(std::string(e.what()) + " [at R = " + std::to_string(R[i]) + "]");
    }
    SampleResult s;
    s.lambda = dc.center.lambda;
    s.Q = dc.Q;
    s.error_bounds = dc.center.error_bounds;
    s.overlap = dc.overlap_minus;
    for (int k = 0; k < n_total; ++k) s.overlap[k] = std::min(dc.overlap_minus[k], dc.overlap_plus[k]);
    s.diag = describe(mesh);
    s.diag["R"] = R[i];
    s.diag["accuracy_target"] = accuracy_target(R_over_r0);
    s.diag["difference_overlap"] = s.overlap;
    block.samples.push_back(std::move(s));

    if (prev_mesh) block.step_overlap.push_back(cross_overlap_impl(*prev_mesh, prev_channels, mesh, dc.center.channels));
    if (i == begin) {
      block.first_mesh = mesh;
      block.first_channels = dc.center.channels;
    }
    if (i + 1 == end) {
      block.last_mesh = mesh;
      block.last_channels = dc.center.channels;
    }
    prev_mesh = std::move(mesh);
    prev_channels = dc.center.channels;
    if (i + 1 < end) {
      const double ratio = R[i + 1] / R[i];
      const double l0 = dc.center.lambda[0];
      solve_opt.estimate = std::min(l0, l0 * ratio * ratio);
    }
  }
  return block;
}

}  // namespace

ChannelTable channel_table(const ModelConfig& cfg, const std::vector<double>& R_grid,
                           int n_channels, const MeshPolicy& policy,
                           const ChannelTableOptions& options) {
  cfg.validate();
  require_solver_sector(cfg);
  if (R_grid.empty()) throw InvalidInput("empty R grid");
  for (std::size_t i = 1; i < R_grid.size(); ++i)
    if (!(R_grid[i] > R_grid[i - 1])) throw InvalidInput("R grid must be strictly ascending");
  if (n_channels < 1) throw InvalidInput("n_channels must be >= 1");

  const int n_total = n_channels + std::max(0, options.guard_channels);
  const std::size_t nR = R_grid.size();
  const std::size_t bs = static_cast<std::size_t>(std::max(1, options.block_size));
  const std::size_t n_blocks = (nR + bs - 1) / bs;
  std::vector<BlockResult> blocks(n_blocks);
  std::vector<std::string> errors(n_blocks);

  auto work = [&](std::size_t b) {
    try {
      blocks[b] = solve_block(cfg, R_grid, b * bs, std::min(nR, (b + 1) * bs), n_total, policy, options);
    } catch (const std::exception& e) {
      errors[b] = e.what();
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) work(b);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < n_blocks; b = next++) work(b);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ConvergenceError(e);

  // Flatten samples and the overlap between consecutive samples.
  std::vector<const SampleResult*> samples;
  std::vector<MatrixXd> step(nR > 0 ? nR - 1 : 0);
  std::size_t idx = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (std::size_t k = 0; k < blocks[b].samples.size(); ++k) {
      samples.push_back(&blocks[b].samples[k]);
      if (k > 0) step[idx - 1] = blocks[b].step_overlap[k - 1];
      ++idx;
    }
    if (b + 1 < n_blocks)
      step[idx - 1] = cross_overlap_impl(blocks[b].last_mesh, blocks[b].last_channels,
                                         blocks[b + 1].first_mesh, blocks[b + 1].first_channels);
  }

  ChannelTable table;
  table.cfg = cfg;
  table.policy = policy;
  table.dlnR = options.dlnR;
  table.R = R_grid;
  table.U.assign(n_channels, std::vector<double>(nR));
  table.Q = table.W = table.conv_est = table.U;

  // Continuation: label[nu] = eigen index at the current sample.
  std::vector<int> label(n_total);
  for (int k = 0; k < n_total; ++k) label[k] = k;
  for (std::size_t i = 0; i < nR; ++i) {
    nlohmann::json d = samples[i]->diag;
    if (i > 0) {
      const MatrixXd& O = step[i - 1];  // [prev eigen index][current eigen index]
      std::vector<int> next(n_total, -1);
      std::vector<bool> used(n_total, false), done(n_total, false);
      double worst = 1.0;
      for (int round = 0; round < n_total; ++round) {
        double best = -1.0;
        int bn = -1, bc = -1;
        for (int nu = 0; nu < n_total; ++nu) {
          if (done[nu]) continue;
          for (int c = 0; c < n_total; ++c) {
            if (used[c]) continue;
            const double v = std::abs(O(label[nu], c));
            if (v > best) {
              best = v;
              bn = nu;
              bc = c;
            }
          }
        }
        next[bn] = bc;
        done[bn] = used[bc] = true;
        if (bn < n_channels) worst = std::min(worst, best);
      }
      d["continuation_overlap"] = worst;
      if (worst < 0.5) {
        // Continuation lost: fall back to energy order at this sample.
        for (int k = 0; k < n_total; ++k) next[k] = k;
        d["continuation_reset"] = true;
      }
      label = next;
    }
    for (int nu = 0; nu < n_channels; ++nu) {
      const int k = label[nu];
      const double R = R_grid[i];
      const double U = (samples[i]->lambda[k] + 3.75) / (units::two_mu * R * R);
      const double Q = samples[i]->Q[k];
      if (std::isnan(Q))
        throw RelabelingError("channel " + std::to_string(nu) + " cannot be differenced at R = " +
                                  std::to_string(R),
                              R, samples[i]->overlap[k]);
      table.U[nu][i] = U;
      table.Q[nu][i] = Q;
      table.W[nu][i] = U + Q;
      table.conv_est[nu][i] = samples[i]->error_bounds[k];
    }
    d["labels"] = std::vector<int>(label.begin(), label.begin() + n_channels);
    table.diagnostics.push_back(std::move(d));
  }
  return table;
}

void write_csv(std::ostream& os, const ChannelTable& t) {
  os << "R,nu,U,Q,W,conv_est\n";
  for (std::size_t i = 0; i < t.R.size(); ++i)
    for (int nu = 0; nu < t.n_channels(); ++nu)
      os << csv::num(t.R[i]) << ',' << nu << ',' << csv::num(t.U[nu][i]) << ',' << csv::num(t.Q[nu][i])
         << ',' << csv::num(t.W[nu][i]) << ',' << csv::num(t.conv_est[nu][i]) << '\n';
}

nlohmann::json sidecar(const ChannelTable& t) {
  return nlohmann::json{{"config", t.cfg},
                        {"mesh_policy", t.policy},
                        {"dlnR", t.dlnR},
                        {"n_channels", t.n_channels()},
                        {"samples", t.R.size()},
                        {"R_min", t.R.empty() ? 0.0 : t.R.front()},
                        {"R_max", t.R.empty() ? 0.0 : t.R.back()},
                        {"includes_diagonal_correction", true},
                        {"conv_est", "eigenvalue error bound relative to |lambda| + 1"},
                        {"diagnostics", t.diagnostics}};
}

ChannelTable read_channel_table(std::istream& in, const nlohmann::json& side) {
  ChannelTable t;
  int n_channels = 0;
  try {
    t.cfg = side.at("config").get<ModelConfig>();
    t.policy = side.at("mesh_policy").get<MeshPolicy>();
    t.dlnR = side.at("dlnR").get<double>();
    n_channels = side.at("n_channels").get<int>();
    t.diagnostics = side.value("diagnostics", nlohmann::json::array());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed channel table sidecar: ") + e.what());
  }
  if (n_channels < 1) throw InvalidInput("channel table sidecar has no channels");
  std::string line;
  if (!std::getline(in, line) || line.rfind("R,nu,U,Q,W,conv_est", 0) != 0)
    throw InvalidInput("channels.csv header must be R,nu,U,Q,W,conv_est");
  t.U.assign(n_channels, {});
  t.Q = t.W = t.conv_est = t.U;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    double f[6];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 6; ++k) {
      const auto r = std::from_chars(p, end, f[k]);
      if (r.ec != std::errc() || (k < 5 && (r.ptr == end || *r.ptr != ',')))
        throw InvalidInput("malformed channels.csv row " + std::to_string(row));
      p = r.ptr + 1;
    }
    const int nu = static_cast<int>(f[1]);
    if (nu < 0 || nu >= n_channels || f[1] != nu)
      throw InvalidInput("channel index out of range in channels.csv row " + std::to_string(row));
    if (nu == 0) t.R.push_back(f[0]);
    if (t.R.empty() || t.R.back() != f[0] || static_cast<int>(t.U[nu].size()) != static_cast<int>(t.R.size()) - 1)
      throw InvalidInput("channels.csv rows must be grouped by R with channels 0.." +
                         std::to_string(n_channels - 1) + " (row " + std::to_string(row) + ")");
    t.U[nu].push_back(f[2]);
    t.Q[nu].push_back(f[3]);
    t.W[nu].push_back(f[4]);
    t.conv_est[nu].push_back(f[5]);
  }
  for (int nu = 0; nu < n_channels; ++nu)
    if (t.U[nu].size() != t.R.size()) throw InvalidInput("channels.csv is truncated");
  if (t.R.size() < 2) throw InvalidInput("channels.csv needs at least two R samples");
  return t;
}

}  // namespace trimerlab
