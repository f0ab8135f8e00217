// Quadrature: Gauss-Legendre and Gauss-Lobatto rules on [-1,1], polygon
// rules by fan sub-triangulation, and a Green-theorem monomial-moment
// oracle used as an independent cross-check.

#ifndef POLYVEM_QUADRATURE_HPP
#define POLYVEM_QUADRATURE_HPP

#include <stdexcept>
#include <vector>

#include "polyvem/mesh.hpp"

namespace polyvem {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EdgeRuleKind { gauss, gauss_lobatto };

struct EdgeRule {
  std::vector<double> nodes;    // increasing, in [-1,1]
  std::vector<double> weights;  // positive, sum to 2
  EdgeRuleKind kind = EdgeRuleKind::gauss;
};

/// n-point Gauss-Legendre rule, exact for degree 2n-1.
EdgeRule gauss_legendre(int n);

/// n-point Gauss-Lobatto rule (endpoints included), exact for degree 2n-3.
/// 2 <= n <= 32; interior nodes are the roots of P'_{n-1}.
EdgeRule gauss_lobatto(int n);

struct PolygonRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int target_degree = 0;

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * f(points[i]);
    return s;
  }
};

/// Rule exact (to roundoff) for bivariate polynomials of total degree
/// <= target_degree: fan sub-triangulation from the centroid (kernel point
/// fallback when the centroid is outside the kernel), collapsed
/// tensor-Gauss rule per triangle.
PolygonRule polygon_rule(const std::vector<Vec2>& polygon, int target_degree);
PolygonRule polygon_rule(const PolygonMesh& mesh, int cell, int target_degree);

/// Fan center used by polygon_rule: the centroid, or a kernel point when
/// the centroid does not see every edge. Throws when no kernel point is
/// found.
Vec2 star_center(const std::vector<Vec2>& polygon);

/// Exact integral of x^a y^b over the polygon via Green's theorem reduced
/// to per-edge 1D Gauss integrals of sufficient degree. Independent of
/// polygon_rule.
double moment_oracle(const std::vector<Vec2>& polygon, int a, int b);

}  // namespace polyvem

#endif
