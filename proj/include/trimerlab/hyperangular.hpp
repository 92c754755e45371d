#pragma once

// Fixed-R adiabatic eigenproblem for three identical bosons, J^Pi = 0+.
//
// The hyperangular Hamiltonian is written in units of hbar^2 / (2 mu R^2):
//
//   2 mu R^2 H_ad = Lambda^2 + 15/4 + 2 mu R^2 V(R; theta, phi),
//   Lambda^2 f   = -(4 / sin 2theta) d_theta (sin 2theta d_theta f) - (4 / sin^2 theta) d_phi^2 f,
//
// on the shape hemisphere theta in [0, pi/2], phi in [0, 2 pi). Bosonic
// symmetry reduces phi to [0, pi/3] with Neumann conditions on both edges.
// The only pair-coincidence point of the reduced domain is the corner
// theta = pi/2, phi = pi/3, toward which the mesh is graded.
//
// Internally the mesh coordinates are u = pi/2 - theta and (reduced domain)
// w = pi/3 - phi, so the coincidence corner sits at u = w = 0 where both are
// represented with full relative precision.

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "trimerlab/eigensolver.hpp"
#include "trimerlab/fe1d.hpp"
#include "trimerlab/model.hpp"

namespace trimerlab {

/// How a per-R mesh is graded toward the coincidence corner.
struct MeshPolicy {
  int order = 4;
  /// Uniform elements across the regularized core (width ~ r0/R).
  int core_elements = 3;
  double elements_per_decade = 5.0;
  /// Largest element size away from the corner, in radians.
  double far_element = 0.2;
  int extra_quadrature = 3;
  /// Grading scale used for the pure (unregularized) potential.
  double pure_width = 1e-7;
  /// Minimum number of nodes across the regularized width.
  int min_nodes_across_width = 8;
};

void to_json(nlohmann::json& j, const MeshPolicy& p);
void from_json(const nlohmann::json& j, MeshPolicy& p);

enum class AngularDomain { Reduced, Full };

struct AngularMesh {
  fe::Mesh1D u;  ///< u = pi/2 - theta on [0, pi/2]
  fe::Mesh1D v;  ///< reduced: w = pi/3 - phi on [0, pi/3]; full: phi on [0, 2 pi), periodic
  AngularDomain domain = AngularDomain::Reduced;
  int quadrature_points = 7;
  /// Angular size of the regularized region, sqrt(2) 3^{1/4} r0 / R (0 when unknown).
  double width = 0.0;

  /// Degrees of freedom: the theta = 0 row collapses to one phi-independent function.
  int n_dofs() const { return (u.n_nodes() - 1) * v.n_nodes() + 1; }
};

/// Angular width of the regularized region at hyperradius R.
double regularized_width(double R_over_r0);

/// Per-R reduced-domain mesh graded with scale proportional to r0/R.
AngularMesh make_mesh(const MeshPolicy& policy, double R_over_r0, CutoffForm cutoff);

/// Uniform reduced-domain mesh (no grading), mainly for tests and oracles.
AngularMesh make_uniform_mesh(int order, int u_elements, int w_elements);

/// Full phi-domain mesh made of six mirror images of a reduced mesh, so the
/// symmetric subspace of the full problem equals the reduced problem exactly.
AngularMesh mirror_to_full_domain(const AngularMesh& reduced);

/// Throws MeshResolutionError when fewer than `min_nodes` nodes lie within
/// the regularized width along either mesh direction.
void check_resolution(const AngularMesh& mesh, double R_over_r0, const ModelConfig& cfg,
                      int min_nodes);

nlohmann::json describe(const AngularMesh& mesh);

/// Assembled finite-element pencil on one mesh. Stiffness and mass are
/// R-independent; the potential matrix is assembled on demand.
class AngularOperator {
 public:
  explicit AngularOperator(AngularMesh mesh);

  const AngularMesh& mesh() const { return mesh_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& mass() const { return mass_; }
  int n_dofs() const { return mesh_.n_dofs(); }

  /// Matrix of 2 mu R^2 V (dimensionless) and the minimum of 2 mu R^2 V over quadrature points.
  SparseMatrix potential(double R, const ModelConfig& cfg, double* minimum = nullptr) const;

  /// Value of the finite-element function with coefficients c at mesh coordinates (u, v).
  double evaluate(const Eigen::VectorXd& c, double u, double v) const;

  /// Inner products <f_i | g_j> between functions given on `other` (coefficients
  /// `other_coeffs`) and on this mesh (`coeffs`), integrated with this mesh's quadrature.
  Eigen::MatrixXd cross_overlap(const AngularOperator& other, const Eigen::MatrixXd& other_coeffs,
                                const Eigen::MatrixXd& coeffs) const;

  /// Global dof of mesh node (iu, iv).
  int dof(int iu, int iv) const;

 private:
  AngularMesh mesh_;
  fe::ReferenceElement ref_;
  SparseMatrix stiffness_, mass_;
  std::vector<double> u_nodes_, v_nodes_;
};

struct AdiabaticSolveOptions {
  LanczosOptions lanczos{};
  /// Guess of the lowest dimensionless eigenvalue, for the first shift.
  std::optional<double> estimate;
};

struct AdiabaticSolution {
  double R = 0.0;
  /// Eigenvalues of Lambda^2 + 2 mu R^2 V (dimensionless, without the 15/4).
  Eigen::VectorXd lambda;
  /// Channel functions, orthonormal in the weighted inner product.
  Eigen::MatrixXd channels;
  Eigen::VectorXd residuals;
  /// Solver bound on |lambda error| / (|lambda| + 1).
  Eigen::VectorXd error_bounds;

  /// Channel potential U_nu = (lambda_nu + 15/4) hbar^2 / (2 mu R^2).
  double U(int nu) const { return (lambda[nu] + 3.75) / (units::two_mu * R * R); }
};

/// Lowest n_channels adiabatic eigenpairs at hyperradius R on an assembled operator.
AdiabaticSolution adiabatic_solve(double R, const ModelConfig& cfg, const AngularOperator& op,
                                  int n_channels, const AdiabaticSolveOptions& options = {});

/// Convenience overload assembling the operator for `mesh`.
AdiabaticSolution adiabatic_solve(double R, const ModelConfig& cfg, const AngularMesh& mesh,
                                  int n_channels, const AdiabaticSolveOptions& options = {});

/// Diagonal correction Q_nu = hbar^2/(2 mu) || d Phi_nu / dR ||^2 by central
/// differences at R e^{+-dlnR} on the same mesh; neighbours are matched by
/// maximal overlap and sign-aligned. Throws RelabelingError when the best
/// overlap falls below 0.5.
struct DiagonalCorrection {
  std::vector<double> Q;  ///< per requested channel
  std::vector<double> overlap_minus, overlap_plus;
  AdiabaticSolution center;
};

DiagonalCorrection diagonal_correction(double R, double dlnR, const ModelConfig& cfg,
                                       const AngularOperator& op, int n_channels,
                                       const AdiabaticSolveOptions& options = {});

double diagonal_correction(double R, double dlnR, const ModelConfig& cfg, const AngularMesh& mesh,
                           int nu);

/// Tabulated channel potentials on a log-spaced R grid.
struct ChannelTable {
  ModelConfig cfg;
  MeshPolicy policy;
  double dlnR = 0.01;
  std::vector<double> R;
  /// [channel][sample]
  std::vector<std::vector<double>> U, Q, W, conv_est;
  /// Per-sample diagnostics (mesh size, width, overlaps, accuracy target).
  nlohmann::json diagnostics = nlohmann::json::array();

  int n_channels() const { return static_cast<int>(U.size()); }
  /// Valid hyperradius range.
  double R_min() const { return R.front(); }
  double R_max() const { return R.back(); }
};

struct ChannelTableOptions {
  double dlnR = 0.01;
  /// Additional eigenpairs solved for continuation through near-crossings.
  int guard_channels = 2;
  /// Samples per independently seeded block (fixed so results do not depend on threads).
  int block_size = 8;
  int threads = 1;
  LanczosOptions lanczos{};
};

/// Log-spaced ascending grid with `per_decade` points per decade.
std::vector<double> log_grid(double R_min, double R_max, double per_decade);

ChannelTable channel_table(const ModelConfig& cfg, const std::vector<double>& R_grid,
                           int n_channels, const MeshPolicy& policy,
                           const ChannelTableOptions& options = {});

/// Relative accuracy target recorded per sample.
double accuracy_target(double R_over_r0);

/// channels.csv: R,nu,U,Q,W,conv_est (rows by R, then channel).
void write_csv(std::ostream& os, const ChannelTable& t);
/// Metadata: config, mesh policy, dlnR, channel count, grid, diagnostics.
nlohmann::json sidecar(const ChannelTable& t);
/// Rebuilds a table from its CSV and sidecar (values round-trip exactly).
ChannelTable read_channel_table(std::istream& csv, const nlohmann::json& sidecar);

}  // namespace trimerlab
