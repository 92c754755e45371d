#include "trimerlab/fe1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trimerlab::fe {

namespace {

// Legendre P_n and its derivative at x.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

std::vector<double> gauss_legendre_points(int n, std::vector<double>* weights) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double xi = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p = 0, dp = 1;
    for (int it = 0; it < 100; ++it) {
      legendre(n, xi, p, dp);
      const double dx = p / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, xi, p, dp);
    x[n - 1 - i] = xi;
    w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  if (weights) *weights = std::move(w);
  return x;
}

std::vector<double> gauss_lobatto_points(int n) {
  // n points: endpoints plus the roots of P'_{n-1}.
  if (n < 2) throw std::invalid_argument("Gauss-Lobatto rule needs at least two points");
  const int m = n - 1;
  std::vector<double> x(n);
  x[0] = -1.0;
  x[n - 1] = 1.0;
  for (int i = 1; i < m; ++i) {
    double xi = -std::cos(std::numbers::pi * i / m);
    for (int it = 0; it < 100; ++it) {
      // Newton on P'_m using P''_m = (2x P'_m - m(m+1) P_m) / (1 - x^2).
      double p, dp;
      legendre(m, xi, p, dp);
      const double d2p = (2.0 * xi * dp - m * (m + 1.0) * p) / (1.0 - xi * xi);
      const double dx = dp / d2p;
      xi -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    x[i] = xi;
  }
  return x;
}

ReferenceElement::ReferenceElement(int order, int quadrature_points) : order_(order) {
  if (order < 1) throw std::invalid_argument("element order must be >= 1");
  nodes_ = gauss_lobatto_points(order + 1);
  quad_x_ = gauss_legendre_points(quadrature_points, &quad_w_);
  const int nb = n_basis();
  shape_.resize(quad_x_.size() * nb);
  dshape_.resize(quad_x_.size() * nb);
  for (std::size_t q = 0; q < quad_x_.size(); ++q)
    evaluate(quad_x_[q], &shape_[q * nb], &dshape_[q * nb]);
}

void ReferenceElement::evaluate(double xi, double* values, double* derivatives) const {
  const int nb = n_basis();
  for (int a = 0; a < nb; ++a) {
    double v = 1.0;
    for (int b = 0; b < nb; ++b)
      if (b != a) v *= (xi - nodes_[b]) / (nodes_[a] - nodes_[b]);
    values[a] = v;
    if (derivatives) {
      double d = 0.0;
      for (int c = 0; c < nb; ++c) {
        if (c == a) continue;
        double term = 1.0 / (nodes_[a] - nodes_[c]);
        for (int b = 0; b < nb; ++b)
          if (b != a && b != c) term *= (xi - nodes_[b]) / (nodes_[a] - nodes_[b]);
        d += term;
      }
      derivatives[a] = d;
    }
  }
}

std::vector<double> Mesh1D::node_coordinates(const ReferenceElement& ref) const {
  std::vector<double> x(n_nodes());
  for (int e = 0; e < n_elements(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    for (int i = 0; i <= order; ++i) {
      const int g = global_node(e, i);
      if (periodic && e == n_elements() - 1 && i == order) continue;
      x[g] = 0.5 * (a + b) + 0.5 * (b - a) * ref.nodes()[i];
    }
  }
  return x;
}

int Mesh1D::locate(double x) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  int e = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(e, 0, n_elements() - 1);
}

std::vector<double> graded_edges(double length, double width, int core_elements, double per_decade,
                                 double far_size) {
  if (!(length > 0) || !(far_size > 0) || core_elements < 1 || !(per_decade > 0))
    throw std::invalid_argument("invalid grading parameters");
  std::vector<double> edges{0.0};
  const double core_h = width / core_elements;
  if (!(width > 0) || core_h >= far_size) {
    const int n = std::max(1, static_cast<int>(std::ceil(length / far_size)));
    for (int i = 1; i <= n; ++i) edges.push_back(length * i / n);
    return edges;
  }
  for (int i = 1; i <= core_elements && edges.back() < length; ++i) edges.push_back(core_h * i);
  const double q = std::pow(10.0, 1.0 / per_decade);
  double x = edges.back();
  while (x * (q - 1.0) < far_size && x * q < length) {
    x *= q;
    edges.push_back(x);
  }
  if (edges.size() > 2) {
    const double last = edges.back() - edges[edges.size() - 2];
    if (length - edges.back() < 0.3 * last) edges.pop_back();
  }
  const double rest = length - edges.back();
  if (rest > 0) {
    const int n = std::max(1, static_cast<int>(std::ceil(rest / far_size - 1e-9)));
    const double start = edges.back();
    for (int i = 1; i <= n; ++i) edges.push_back(start + rest * i / n);
  }
  edges.back() = length;
  return edges;
}

}  // namespace trimerlab::fe
