#include "polyvem/quadrature.hpp"

#include <cmath>

namespace polyvem {

namespace {

// Legendre P_n and P'_n at t by the three-term recurrence.
void legendre_pair(int n, double t, double& p, double& dp) {
  double p0 = 1.0, p1 = t;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  // derivative from P_n and P_{n-1}
  dp = n * (t * p1 - p0) / (t * t - 1.0);
}

}  // namespace

EdgeRule gauss_legendre(int n) {
  if (n < 1) throw QuadratureError("gauss rule needs n >= 1");
  EdgeRule rule;
  rule.kind = EdgeRuleKind::gauss;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev initial guess, Newton refinement
    double t = -std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre_pair(n, t, p, dp);
      double dt = -p / dp;
      t += dt;
      if (std::abs(dt) < 1e-15) break;
    }
    legendre_pair(n, t, p, dp);
    rule.nodes[i] = t;
    rule.nodes[n - 1 - i] = -t;
    double w = 2.0 / ((1.0 - t * t) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

EdgeRule gauss_lobatto(int n) {
  if (n < 2 || n > 32) throw QuadratureError("gauss_lobatto needs 2 <= n <= 32");
  EdgeRule rule;
  rule.kind = EdgeRuleKind::gauss_lobatto;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = n - 1;  // interior nodes are roots of P'_m
  rule.nodes[0] = -1.0;
  rule.nodes[n - 1] = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    // interlacing initial guess between Gauss-Legendre-flavoured angles
    double t = -std::cos(M_PI * i / m);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      // Newton on f = P'_m using f' = P''_m from the Legendre ODE:
      // (1-t^2) P'' = 2 t P' - m(m+1) P
      double p, dp;
      legendre_pair(m, t, p, dp);
      double ddp = (2.0 * t * dp - m * (m + 1.0) * p) / (1.0 - t * t);
      double dt = -dp / ddp;
      t += dt;
      if (std::abs(dt) < 1e-15) {
        converged = true;
        break;
      }
    }
    if (!converged) throw QuadratureError("gauss_lobatto Newton stalled");
    rule.nodes[i] = t;
  }
  // enforce exact symmetry
  for (int i = 0; i < n / 2; ++i) {
    double t = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -t;
    rule.nodes[n - 1 - i] = t;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  for (int i = 0; i < n; ++i) {
    double p, dp;
    legendre_pair(m, rule.nodes[i], p, dp);
    rule.weights[i] = 2.0 / (m * (m + 1.0) * p * p);
  }
  return rule;
}

namespace {

// kernel point used as the fan center when the centroid falls outside
bool centroid_sees_polygon(const std::vector<Vec2>& pts, const Vec2& x) {
  const int k = static_cast<int>(pts.size());
  for (int i = 0; i < k; ++i) {
    Vec2 e = pts[(i + 1) % k] - pts[i];
    if (e.x() * (x.y() - pts[i].y()) - e.y() * (x.x() - pts[i].x()) <= 0.0)
      return false;
  }
  return true;
}

}  // namespace

Vec2 star_center(const std::vector<Vec2>& polygon) {
  if (polygon.size() < 3) throw QuadratureError("star_center needs >= 3 vertices");
  Vec2 center = polygon_centroid(polygon);
  if (centroid_sees_polygon(polygon, center)) return center;

  PolygonMesh tmp;
  tmp.vertices = polygon;
  tmp.cells.push_back({});
  for (std::size_t i = 0; i < polygon.size(); ++i)
    tmp.cells[0].push_back(static_cast<int>(i));
  tmp.finalize();
  RegularityReport rep = check_cell_regularity(tmp, 0, 0.0, 0.0);
  if (rep.gamma <= 0.0)
    throw QuadratureError("polygon not star-shaped w.r.t. centroid or kernel");
  // rerun the kernel search to recover the point itself
  // (check_cell_regularity reports only the ratio)
  // cheap: sample kernel on a grid and take any admissible point
  CellGeometry g = tmp.cell_geometry(0);
  for (int iy = 1; iy < 64; ++iy)
    for (int ix = 1; ix < 64; ++ix) {
      Vec2 x(g.x_min + ix * (g.x_max - g.x_min) / 64.0,
             g.y_min + iy * (g.y_max - g.y_min) / 64.0);
      if (centroid_sees_polygon(polygon, x)) return x;
    }
  throw QuadratureError("polygon not star-shaped w.r.t. centroid or kernel");
}

PolygonRule polygon_rule(const std::vector<Vec2>& polygon, int target_degree) {
  if (polygon.size() < 3) throw QuadratureError("polygon_rule needs >= 3 vertices");
  if (target_degree > 40) throw QuadratureError("polygon_rule degree cap is 40");
  const int d = std::max(target_degree, 0);

  Vec2 center = star_center(polygon);

  // collapsed tensor-Gauss on the reference triangle: (u,v)->(u, v(1-u))
  // with Jacobian (1-u); m points handle degree d plus the Jacobian factor
  const int m = (d + 1) / 2 + 1;
  EdgeRule gu = gauss_legendre(m);

  PolygonRule rule;
  rule.target_degree = d;
  const int k = static_cast<int>(polygon.size());
  for (int t = 0; t < k; ++t) {
    const Vec2& a = center;
    const Vec2& b = polygon[t];
    const Vec2& c = polygon[(t + 1) % k];
    double jac2 = (b.x() - a.x()) * (c.y() - a.y()) -
                  (c.x() - a.x()) * (b.y() - a.y());  // 2*area, signed
    for (int i = 0; i < m; ++i) {
      double u = 0.5 * (gu.nodes[i] + 1.0);
      for (int j = 0; j < m; ++j) {
        double v = 0.5 * (gu.nodes[j] + 1.0) * (1.0 - u);
        Vec2 x = a + u * (b - a) + v * (c - a);
        double w = 0.25 * gu.weights[i] * gu.weights[j] * (1.0 - u) * jac2;
        rule.points.push_back(x);
        rule.weights.push_back(w);
      }
    }
  }
  return rule;
}

PolygonRule polygon_rule(const PolygonMesh& mesh, int cell, int target_degree) {
  const auto& loop = mesh.cells[cell];
  std::vector<Vec2> pts(loop.size());
  for (std::size_t i = 0; i < loop.size(); ++i) pts[i] = mesh.vertices[loop[i]];
  return polygon_rule(pts, target_degree);
}

double moment_oracle(const std::vector<Vec2>& polygon, int a, int b) {
  if (a < 0 || b < 0) throw QuadratureError("moment_oracle needs a, b >= 0");
  // int_K x^a y^b dA = (1/(a+1)) oint x^{a+1} y^b dy; per edge the
  // integrand is a 1D polynomial of degree a+b+1 in the edge parameter
  const int n = (a + b + 1) / 2 + 1;  // Gauss exactness 2n-1 >= a+b+1
  EdgeRule g = gauss_legendre(n);
  const int k = static_cast<int>(polygon.size());
  double total = 0.0;
  for (int e = 0; e < k; ++e) {
    const Vec2& p = polygon[e];
    const Vec2& q = polygon[(e + 1) % k];
    double dy = q.y() - p.y();
    if (dy == 0.0) continue;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double t = 0.5 * (g.nodes[i] + 1.0);
      double x = p.x() + t * (q.x() - p.x());
      double y = p.y() + t * (q.y() - p.y());
      s += 0.5 * g.weights[i] * std::pow(x, a + 1) * std::pow(y, b);
    }
    total += s * dy;
  }
  return total / (a + 1.0);
}

}  // namespace polyvem
