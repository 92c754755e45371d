#pragma once

// One-dimensional high-order Lagrange elements on Gauss-Lobatto nodes.

#include <vector>

namespace trimerlab::fe {

/// Reference element of polynomial order p on [-1, 1] with Gauss-Legendre quadrature.
class ReferenceElement {
 public:
  ReferenceElement(int order, int quadrature_points);

  int order() const { return order_; }
  int n_basis() const { return order_ + 1; }
  int n_quad() const { return static_cast<int>(quad_x_.size()); }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& quad_points() const { return quad_x_; }
  const std::vector<double>& quad_weights() const { return quad_w_; }

  /// Basis value / derivative at quadrature point q, basis a: index [q * n_basis + a].
  const std::vector<double>& shape() const { return shape_; }
  const std::vector<double>& shape_derivative() const { return dshape_; }

  /// Evaluate all basis functions (and derivatives) at an arbitrary reference point.
  void evaluate(double xi, double* values, double* derivatives = nullptr) const;

 private:
  int order_;
  std::vector<double> nodes_;
  std::vector<double> quad_x_, quad_w_;
  std::vector<double> shape_, dshape_;
};

std::vector<double> gauss_legendre_points(int n, std::vector<double>* weights);
std::vector<double> gauss_lobatto_points(int n);

/// A 1D mesh given by ascending element edges. Node i of element e has global
/// index e * order + i; with `periodic` the last node wraps to index 0.
struct Mesh1D {
  std::vector<double> edges;
  int order = 4;
  bool periodic = false;

  int n_elements() const { return static_cast<int>(edges.size()) - 1; }
  int n_nodes() const { return n_elements() * order + (periodic ? 0 : 1); }
  int global_node(int element, int local) const {
    const int g = element * order + local;
    return periodic && g == n_elements() * order ? 0 : g;
  }
  /// Physical coordinates of every global node.
  std::vector<double> node_coordinates(const ReferenceElement& ref) const;
  /// Element containing x (clamped to the mesh range).
  int locate(double x) const;
};

/// Element edges on [0, length] graded toward 0: `core_elements` uniform
/// elements across [0, width], then geometric growth with
/// `per_decade` elements per decade until the spacing reaches `far_size`,
/// then uniform spacing to `length`.
std::vector<double> graded_edges(double length, double width, int core_elements, double per_decade,
                                 double far_size);

}  // namespace trimerlab::fe
