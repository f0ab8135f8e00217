#include "polyvem/poly_basis.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace polyvem {

BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "q1") return BasisKind::monomial_q1;
  if (s == "q2") return BasisKind::l2scaled_q2;
  if (s == "q3") return BasisKind::legendre_q3;
  throw BasisError("unknown basis kind: " + s);
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::monomial_q1: return "q1";
    case BasisKind::l2scaled_q2: return "q2";
    case BasisKind::legendre_q3: return "q3";
  }
  return "?";
}

std::vector<MultiIndex> multi_indices(int p) {
  std::vector<MultiIndex> out;
  for (int l = 0; l <= p; ++l)
    for (int a1 = l; a1 >= 0; --a1) out.push_back({a1, l - a1});
  return out;
}

namespace {

// value and first/second derivative of Legendre P_n at t
void legendre_012(int n, double t, double& p, double& dp, double& ddp) {
  double pm = 0.0, dpm = 0.0, ddpm = 0.0;  // P_{k-1}
  p = 1.0;
  dp = 0.0;
  ddp = 0.0;
  for (int k = 1; k <= n; ++k) {
    double a = (2.0 * k - 1.0) / k, b = (k - 1.0) / k;
    double pn = a * t * p - b * pm;
    double dpn = a * (p + t * dp) - b * dpm;
    double ddpn = a * (2.0 * dp + t * ddp) - b * ddpm;
    pm = p;
    dpm = dp;
    ddpm = ddp;
    p = pn;
    dp = dpn;
    ddp = ddpn;
  }
}

double int_pow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

PolyBasis::PolyBasis(BasisKind kind, int degree, const CellGeometry& geom,
                     const PolygonRule& norm_rule)
    : kind_(kind), degree_(degree), indices_(multi_indices(degree)),
      geom_(geom) {
  if (degree < 0) throw BasisError("basis degree must be >= 0");
  inv_norm_.assign(indices_.size(), 1.0);
  if (kind_ == BasisKind::legendre_q3) {
    box_center_ = Vec2(0.5 * (geom.x_max + geom.x_min),
                       0.5 * (geom.y_max + geom.y_min));
    box_extent_ = Vec2(geom.x_max - geom.x_min, geom.y_max - geom.y_min);
    if (box_extent_.x() <= 0 || box_extent_.y() <= 0)
      throw BasisError("degenerate bounding box for legendre basis");
    // unit L2 norm over the bounding box, so the basis is orthonormal
    // there: ||P_a(tx) P_b(ty)||^2 = ex ey / ((2a+1)(2b+1))
    for (std::size_t m = 0; m < indices_.size(); ++m) {
      const MultiIndex& a = indices_[m];
      inv_norm_[m] = std::sqrt((2.0 * a.a1 + 1.0) * (2.0 * a.a2 + 1.0) /
                               (box_extent_.x() * box_extent_.y()));
    }
  }
  if (kind_ == BasisKind::l2scaled_q2) {
    for (int m = 0; m < size(); ++m) {
      double nrm2 = norm_rule.integrate([&](const Vec2& x) {
        double v = value(m, x);  // inv_norm_[m] is still 1 here
        return v * v;
      });
      if (nrm2 <= 0.0) throw BasisError("zero-norm basis member");
      inv_norm_[m] = 1.0 / std::sqrt(nrm2);
    }
  }
}

PolyBasis::PolyBasis(BasisKind kind, int degree, const PolygonMesh& mesh,
                     int cell)
    : PolyBasis(kind, degree, mesh.cell_geometry(cell),
                kind == BasisKind::l2scaled_q2
                    ? polygon_rule(mesh, cell, 2 * degree)
                    : PolygonRule{}) {}

double PolyBasis::value(int member, const Vec2& x) const {
  const MultiIndex& a = indices_[member];
  if (kind_ == BasisKind::legendre_q3) {
    double tx = 2.0 * (x.x() - box_center_.x()) / box_extent_.x();
    double ty = 2.0 * (x.y() - box_center_.y()) / box_extent_.y();
    double p1, d1, dd1, p2, d2, dd2;
    legendre_012(a.a1, tx, p1, d1, dd1);
    legendre_012(a.a2, ty, p2, d2, dd2);
    return inv_norm_[member] * p1 * p2;
  }
  double sx = (x.x() - geom_.barycenter.x()) / geom_.diameter;
  double sy = (x.y() - geom_.barycenter.y()) / geom_.diameter;
  return inv_norm_[member] * int_pow(sx, a.a1) * int_pow(sy, a.a2);
}

Vec2 PolyBasis::gradient(int member, const Vec2& x) const {
  const MultiIndex& a = indices_[member];
  if (kind_ == BasisKind::legendre_q3) {
    double cx = 2.0 / box_extent_.x(), cy = 2.0 / box_extent_.y();
    double tx = cx * (x.x() - box_center_.x());
    double ty = cy * (x.y() - box_center_.y());
    double p1, d1, dd1, p2, d2, dd2;
    legendre_012(a.a1, tx, p1, d1, dd1);
    legendre_012(a.a2, ty, p2, d2, dd2);
    return inv_norm_[member] * Vec2(cx * d1 * p2, cy * p1 * d2);
  }
  double h = geom_.diameter;
  double sx = (x.x() - geom_.barycenter.x()) / h;
  double sy = (x.y() - geom_.barycenter.y()) / h;
  double gx = a.a1 > 0 ? a.a1 * int_pow(sx, a.a1 - 1) * int_pow(sy, a.a2) / h : 0.0;
  double gy = a.a2 > 0 ? a.a2 * int_pow(sx, a.a1) * int_pow(sy, a.a2 - 1) / h : 0.0;
  return inv_norm_[member] * Vec2(gx, gy);
}

double PolyBasis::laplacian(int member, const Vec2& x) const {
  const MultiIndex& a = indices_[member];
  if (kind_ == BasisKind::legendre_q3) {
    double cx = 2.0 / box_extent_.x(), cy = 2.0 / box_extent_.y();
    double tx = cx * (x.x() - box_center_.x());
    double ty = cy * (x.y() - box_center_.y());
    double p1, d1, dd1, p2, d2, dd2;
    legendre_012(a.a1, tx, p1, d1, dd1);
    legendre_012(a.a2, ty, p2, d2, dd2);
    return inv_norm_[member] * (cx * cx * dd1 * p2 + cy * cy * p1 * dd2);
  }
  double h = geom_.diameter;
  double sx = (x.x() - geom_.barycenter.x()) / h;
  double sy = (x.y() - geom_.barycenter.y()) / h;
  double lxx = a.a1 > 1 ? a.a1 * (a.a1 - 1.0) * int_pow(sx, a.a1 - 2) *
                              int_pow(sy, a.a2)
                        : 0.0;
  double lyy = a.a2 > 1 ? a.a2 * (a.a2 - 1.0) * int_pow(sx, a.a1) *
                              int_pow(sy, a.a2 - 2)
                        : 0.0;
  return inv_norm_[member] * (lxx + lyy) / (h * h);
}

std::vector<double> laplacian_coefficients(const PolyBasis& basis, int member,
                                           const PolyBasis& moment_basis,
                                           const PolygonRule& rule) {
  const int n = moment_basis.size();
  std::vector<double> out(n, 0.0);
  if (basis.index(member).total() <= 1 || n == 0) return out;

  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v = rule.integrate([&](const Vec2& x) {
        return moment_basis.value(i, x) * moment_basis.value(j, x);
      });
      M(i, j) = v;
      M(j, i) = v;
    }
    rhs(i) = rule.integrate([&](const Vec2& x) {
      return basis.laplacian(member, x) * moment_basis.value(i, x);
    });
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
  if (!std::isfinite(cond) || cond > 1e12)
    throw BasisError("moment-basis mass matrix too ill-conditioned (cond " +
                     std::to_string(cond) + ")");
  Eigen::VectorXd c = svd.solve(rhs);
  for (int i = 0; i < n; ++i) out[i] = c(i);
  return out;
}

}  // namespace polyvem
