#include "polyvem/vem_local.hpp"

#include <cmath>
#include <vector>

namespace polyvem {

// Minimal dense kernels on __float128 for matrices a few dozen wide.
namespace quad_ops {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<__float128> a;
  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  __float128& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const __float128& at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }
};

inline Mat from_eigen(const Eigen::MatrixXd& m) {
  Mat q(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < q.rows; ++i)
    for (int j = 0; j < q.cols; ++j) q.at(i, j) = m(i, j);
  return q;
}

inline Eigen::MatrixXd to_eigen(const Mat& q) {
  Eigen::MatrixXd m(q.rows, q.cols);
  for (int i = 0; i < q.rows; ++i)
    for (int j = 0; j < q.cols; ++j) m(i, j) = static_cast<double>(q.at(i, j));
  return m;
}

inline Mat mul(const Mat& x, const Mat& y) {
  Mat z(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < y.cols; ++j) {
      __float128 s = 0;
      for (int k = 0; k < x.cols; ++k) s += x.at(i, k) * y.at(k, j);
      z.at(i, j) = s;
    }
  return z;
}

inline Mat add(const Mat& x, const Mat& y) {
  Mat z = x;
  for (std::size_t k = 0; k < z.a.size(); ++k) z.a[k] += y.a[k];
  return z;
}

inline Mat transpose(const Mat& x) {
  Mat z(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) z.at(j, i) = x.at(i, j);
  return z;
}

inline void symmetrize(Mat& x) {
  for (int i = 0; i < x.rows; ++i)
    for (int j = i + 1; j < x.cols; ++j) {
      __float128 v = (x.at(i, j) + x.at(j, i)) / 2;
      x.at(i, j) = v;
      x.at(j, i) = v;
    }
}

// Gaussian elimination with partial pivoting; throws on singular pivot.
inline Mat solve(Mat g, Mat b, int cell) {
  const int n = g.rows;
  auto qabs = [](__float128 v) { return v < 0 ? -v : v; };
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (qabs(g.at(i, k)) > qabs(g.at(piv, k))) piv = i;
    if (qabs(g.at(piv, k)) == 0)
      throw VemError("singular constrained Gram system on cell " +
                     std::to_string(cell));
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(g.at(k, j), g.at(piv, j));
      for (int j = 0; j < b.cols; ++j) std::swap(b.at(k, j), b.at(piv, j));
    }
    for (int i = k + 1; i < n; ++i) {
      __float128 f = g.at(i, k) / g.at(k, k);
      if (f == 0) continue;
      for (int j = k; j < n; ++j) g.at(i, j) -= f * g.at(k, j);
      for (int j = 0; j < b.cols; ++j) b.at(i, j) -= f * b.at(k, j);
    }
  }
  Mat x(n, b.cols);
  for (int j = 0; j < b.cols; ++j)
    for (int i = n - 1; i >= 0; --i) {
      __float128 s = b.at(i, j);
      for (int k = i + 1; k < n; ++k) s -= g.at(i, k) * x.at(k, j);
      x.at(i, j) = s / g.at(i, i);
    }
  return x;
}

}  // namespace quad_ops

// Extended-precision evaluation pipeline behind the local matrices. The
// p-consistency identity survives into the assembled operators only when
// B and D satisfy Green's identity well below double round-off: projector
// coefficients of size 1e6-1e7 amplify any quadrature-level inconsistency
// between the two integration-by-parts directions. Hardware long double
// (64-bit mantissa) keeps that inconsistency near 1e-19 at double-like
// speed; the matrix algebra on top then runs at 113 bits.
namespace {

using LD = long double;

void legendre_ld(int n, LD t, LD& p, LD& dp, LD& ddp) {
  LD pm = 0, dpm = 0, ddpm = 0;  // P_{k-1}
  p = 1;
  dp = 0;
  ddp = 0;
  for (int k = 1; k <= n; ++k) {
    LD a = (2.0L * k - 1.0L) / k, b = (k - 1.0L) / k;
    LD pn = a * t * p - b * pm;
    LD dpn = a * (p + t * dp) - b * dpm;
    LD ddpn = a * (2.0L * dp + t * ddp) - b * ddpm;
    pm = p;
    dpm = dp;
    ddpm = ddp;
    p = pn;
    dp = dpn;
    ddp = ddpn;
  }
}

struct LRule1D {
  std::vector<LD> x, w;
};

LRule1D gauss_ld(int n) {
  LRule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    LD t = -std::cos(static_cast<LD>(M_PI) * (i + 0.75L) / (n + 0.5L));
    LD p = 0, dp = 1, dd = 0;
    for (int it = 0; it < 100; ++it) {
      legendre_ld(n, t, p, dp, dd);
      LD dt = -p / dp;
      t += dt;
      if (std::abs(dt) < 1e-19L) break;
    }
    legendre_ld(n, t, p, dp, dd);
    r.x[i] = t;
    r.x[n - 1 - i] = -t;
    LD w = 2.0L / ((1.0L - t * t) * dp * dp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0;
  return r;
}

LRule1D lobatto_ld(int n) {
  LRule1D r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = n - 1;
  r.x[0] = -1;
  r.x[n - 1] = 1;
  for (int i = 1; i < n - 1; ++i) {
    LD t = -std::cos(static_cast<LD>(M_PI) * i / m);
    for (int it = 0; it < 100; ++it) {
      LD p, dp, dd;
      legendre_ld(m, t, p, dp, dd);
      LD dt = -dp / dd;
      t += dt;
      if (std::abs(dt) < 1e-19L) break;
    }
    r.x[i] = t;
  }
  for (int i = 0; i < n / 2; ++i) {
    LD t = 0.5L * (r.x[n - 1 - i] - r.x[i]);
    r.x[i] = -t;
    r.x[n - 1 - i] = t;
  }
  if (n % 2 == 1) r.x[n / 2] = 0;
  for (int i = 0; i < n; ++i) {
    LD p, dp, dd;
    legendre_ld(m, r.x[i], p, dp, dd);
    r.w[i] = 2.0L / (m * (m + 1.0L) * p * p);
  }
  return r;
}

struct LRule2D {
  std::vector<LD> x, y, w;
};

// same fan construction as polygon_rule, carried out in long double
LRule2D polygon_rule_ld(const std::vector<Vec2>& poly, int degree) {
  Vec2 c0 = star_center(poly);
  const LD ax = c0.x(), ay = c0.y();
  const int m = (degree + 1) / 2 + 1;
  LRule1D g = gauss_ld(m);
  LRule2D rule;
  const int k = static_cast<int>(poly.size());
  for (int t = 0; t < k; ++t) {
    LD bx = poly[t].x(), by = poly[t].y();
    LD cx = poly[(t + 1) % k].x(), cy = poly[(t + 1) % k].y();
    LD jac2 = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    for (int i = 0; i < m; ++i) {
      LD u = 0.5L * (g.x[i] + 1.0L);
      for (int j = 0; j < m; ++j) {
        LD v = 0.5L * (g.x[j] + 1.0L) * (1.0L - u);
        rule.x.push_back(ax + u * (bx - ax) + v * (cx - ax));
        rule.y.push_back(ay + u * (by - ay) + v * (cy - ay));
        rule.w.push_back(0.25L * g.w[i] * g.w[j] * (1.0L - u) * jac2);
      }
    }
  }
  return rule;
}

LD int_pow_ld(LD x, int n) {
  LD r = 1;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// long double mirror of PolyBasis (values, gradients, Laplacians)
class LBasis {
 public:
  LBasis(BasisKind kind, int degree, const CellGeometry& geom)
      : kind_(kind), idx_(multi_indices(degree)),
        cx_(geom.barycenter.x()), cy_(geom.barycenter.y()),
        h_(geom.diameter),
        bx_(0.5L * (static_cast<LD>(geom.x_max) + geom.x_min)),
        by_(0.5L * (static_cast<LD>(geom.y_max) + geom.y_min)),
        ex_(static_cast<LD>(geom.x_max) - geom.x_min),
        ey_(static_cast<LD>(geom.y_max) - geom.y_min) {
    inv_norm_.assign(idx_.size(), 1.0L);
    if (kind_ == BasisKind::legendre_q3) {
      // orthonormal over the bounding box, mirroring PolyBasis
      for (std::size_t b = 0; b < idx_.size(); ++b)
        inv_norm_[b] = std::sqrt((2.0L * idx_[b].a1 + 1.0L) *
                                 (2.0L * idx_[b].a2 + 1.0L) / (ex_ * ey_));
    }
  }

  void set_norms(const LRule2D& rule) {
    if (kind_ != BasisKind::l2scaled_q2) return;
    for (int b = 0; b < size(); ++b) {
      LD s = 0;
      for (std::size_t q = 0; q < rule.w.size(); ++q) {
        LD v = value(b, rule.x[q], rule.y[q]);
        s += rule.w[q] * v * v;
      }
      inv_norm_[b] = 1.0L / std::sqrt(s);
    }
  }

  int size() const { return static_cast<int>(idx_.size()); }
  int total(int b) const { return idx_[b].total(); }

  LD value(int b, LD x, LD y) const {
    const MultiIndex& a = idx_[b];
    if (kind_ == BasisKind::legendre_q3) {
      LD p1, d1, dd1, p2, d2, dd2;
      legendre_ld(a.a1, 2.0L * (x - bx_) / ex_, p1, d1, dd1);
      legendre_ld(a.a2, 2.0L * (y - by_) / ey_, p2, d2, dd2);
      return inv_norm_[b] * p1 * p2;
    }
    return inv_norm_[b] * int_pow_ld((x - cx_) / h_, a.a1) *
           int_pow_ld((y - cy_) / h_, a.a2);
  }

  void gradient(int b, LD x, LD y, LD& gx, LD& gy) const {
    const MultiIndex& a = idx_[b];
    if (kind_ == BasisKind::legendre_q3) {
      LD sx = 2.0L / ex_, sy = 2.0L / ey_;
      LD p1, d1, dd1, p2, d2, dd2;
      legendre_ld(a.a1, sx * (x - bx_), p1, d1, dd1);
      legendre_ld(a.a2, sy * (y - by_), p2, d2, dd2);
      gx = inv_norm_[b] * sx * d1 * p2;
      gy = inv_norm_[b] * sy * p1 * d2;
      return;
    }
    LD sx = (x - cx_) / h_, sy = (y - cy_) / h_;
    gx = a.a1 > 0
             ? inv_norm_[b] * a.a1 * int_pow_ld(sx, a.a1 - 1) *
                   int_pow_ld(sy, a.a2) / h_
             : 0.0L;
    gy = a.a2 > 0
             ? inv_norm_[b] * a.a2 * int_pow_ld(sx, a.a1) *
                   int_pow_ld(sy, a.a2 - 1) / h_
             : 0.0L;
  }

  LD laplacian(int b, LD x, LD y) const {
    const MultiIndex& a = idx_[b];
    if (kind_ == BasisKind::legendre_q3) {
      LD sx = 2.0L / ex_, sy = 2.0L / ey_;
      LD p1, d1, dd1, p2, d2, dd2;
      legendre_ld(a.a1, sx * (x - bx_), p1, d1, dd1);
      legendre_ld(a.a2, sy * (y - by_), p2, d2, dd2);
      return inv_norm_[b] * (sx * sx * dd1 * p2 + sy * sy * p1 * dd2);
    }
    LD sx = (x - cx_) / h_, sy = (y - cy_) / h_;
    LD lxx = a.a1 > 1 ? a.a1 * (a.a1 - 1.0L) * int_pow_ld(sx, a.a1 - 2) *
                            int_pow_ld(sy, a.a2)
                      : 0.0L;
    LD lyy = a.a2 > 1 ? a.a2 * (a.a2 - 1.0L) * int_pow_ld(sx, a.a1) *
                            int_pow_ld(sy, a.a2 - 2)
                      : 0.0L;
    return inv_norm_[b] * (lxx + lyy) / (h_ * h_);
  }

 private:
  BasisKind kind_;
  std::vector<MultiIndex> idx_;
  LD cx_, cy_, h_;
  LD bx_, by_, ex_, ey_;
  std::vector<LD> inv_norm_;
};

}  // namespace

DofLayout build_dof_layout(const PolygonMesh& mesh, int cell, int p) {
  if (p < 1) throw VemError("dof layout needs p >= 1");
  const auto& loop = mesh.cells[cell];
  const int nv = static_cast<int>(loop.size());

  DofLayout layout;
  layout.p = p;
  layout.vertex_count = nv;
  layout.boundary_count = p * nv;
  layout.internal_count = poly_space_dim(p - 2);
  layout.total = layout.boundary_count + layout.internal_count;

  for (int i = 0; i < nv; ++i)
    layout.dofs.push_back(
        {DofKind::vertex, i, -1, mesh.vertices[loop[i]]});

  if (p >= 2) {
    EdgeRule gl = gauss_lobatto(p + 1);
    for (int e = 0; e < nv; ++e) {
      Vec2 a = mesh.vertices[loop[e]];
      Vec2 b = mesh.vertices[loop[(e + 1) % nv]];
      for (int k = 1; k < p; ++k) {
        double t = 0.5 * (gl.nodes[k] + 1.0);
        layout.dofs.push_back({DofKind::edge, e, k - 1, a + t * (b - a)});
      }
    }
  }
  for (int g = 0; g < layout.internal_count; ++g)
    layout.dofs.push_back({DofKind::internal, -1, g, Vec2(0, 0)});
  return layout;
}

Eigen::MatrixXd stabilizer(const Eigen::MatrixXd& D_mat,
                           const Eigen::MatrixXd& Pi_star) {
  Eigen::MatrixXd Pi_dof = D_mat * Pi_star;
  Eigen::MatrixXd R =
      Eigen::MatrixXd::Identity(Pi_dof.rows(), Pi_dof.cols()) - Pi_dof;
  return R.transpose() * R;
}

double LocalOperators::projected_value(const Eigen::VectorXd& dofs,
                                       const Vec2& x) const {
  Eigen::VectorXd c =
      (Pi_ext * dofs.cast<long double>()).cast<double>();
  double v = 0.0;
  for (int b = 0; b < basis->size(); ++b) v += c(b) * basis->value(b, x);
  return v;
}

Vec2 LocalOperators::projected_gradient(const Eigen::VectorXd& dofs,
                                        const Vec2& x) const {
  Eigen::VectorXd c =
      (Pi_ext * dofs.cast<long double>()).cast<double>();
  Vec2 g{0, 0};
  for (int b = 0; b < basis->size(); ++b) g += c(b) * basis->gradient(b, x);
  return g;
}

LocalOperators build_local_operators(const PolygonMesh& mesh, int cell, int p,
                                     BasisKind kind, const ScalarField& f) {
  LocalOperators ops;
  ops.layout = build_dof_layout(mesh, cell, p);
  ops.geom = mesh.cell_geometry(cell);

  const auto& loop = mesh.cells[cell];
  const int nv = static_cast<int>(loop.size());
  const int G_d = ops.layout.total;
  const int I_d = ops.layout.internal_count;

  PolygonRule rule = polygon_rule(mesh, cell, 2 * p + 2);
  ops.basis = std::make_shared<PolyBasis>(kind, p, ops.geom, rule);
  if (p >= 2)
    ops.moment_basis = std::make_shared<PolyBasis>(kind, p - 2, ops.geom, rule);
  const PolyBasis& basis = *ops.basis;
  const int np = basis.size();

  // per-edge data in long double; vertices are exact in any precision
  std::vector<Vec2> poly(nv);
  for (int i = 0; i < nv; ++i) poly[i] = mesh.vertices[loop[i]];
  std::vector<LD> edge_len(nv), nrm_x(nv), nrm_y(nv);
  LD perimeter = 0, area_ld = 0;
  for (int e = 0; e < nv; ++e) {
    LD tx = static_cast<LD>(poly[(e + 1) % nv].x()) - poly[e].x();
    LD ty = static_cast<LD>(poly[(e + 1) % nv].y()) - poly[e].y();
    edge_len[e] = std::sqrt(tx * tx + ty * ty);
    nrm_x[e] = ty / edge_len[e];  // outward for CCW
    nrm_y[e] = -tx / edge_len[e];
    perimeter += edge_len[e];
    area_ld += (static_cast<LD>(poly[e].x()) * poly[(e + 1) % nv].y() -
                static_cast<LD>(poly[(e + 1) % nv].x()) * poly[e].y()) /
               2.0L;
  }

  LRule2D lrule = polygon_rule_ld(poly, 2 * p + 2);
  LBasis lb(kind, p, ops.geom);
  lb.set_norms(lrule);
  LBasis lmb(kind, p - 2, ops.geom);
  lmb.set_norms(lrule);
  const std::size_t nq = lrule.w.size();

  // B_raw(a, i) = a^K(q_a, phi_i) by integration by parts:
  //   - sum_g c_g |K| dof_g(phi_i) + sum_edges GL(p+1)[dq_a/dn * phi_i]
  // with the GL nodes coinciding with the boundary dofs.
  std::vector<LD> B_ld(static_cast<std::size_t>(np) * G_d, 0.0L);
  std::vector<LD> D_ld(static_cast<std::size_t>(G_d) * np, 0.0L);
  LRule1D lgl = lobatto_ld(p + 1);
  auto boundary_dof_index = [&](int e, int node) {
    // node 0 -> vertex e, node p -> vertex e+1, node k -> edge dof
    if (node == 0) return e;
    if (node == p) return (e + 1) % nv;
    return nv + e * (p - 1) + (node - 1);
  };
  for (int e = 0; e < nv; ++e) {
    LD vax = poly[e].x(), vay = poly[e].y();
    LD vbx = poly[(e + 1) % nv].x(), vby = poly[(e + 1) % nv].y();
    for (int node = 0; node <= p; ++node) {
      LD t = 0.5L * (lgl.x[node] + 1.0L);
      LD x = vax + t * (vbx - vax), y = vay + t * (vby - vay);
      const int i = boundary_dof_index(e, node);
      for (int a = 0; a < np; ++a) {
        LD gx, gy;
        lb.gradient(a, x, y, gx, gy);
        B_ld[static_cast<std::size_t>(a) * G_d + i] +=
            0.5L * edge_len[e] * lgl.w[node] * (gx * nrm_x[e] + gy * nrm_y[e]);
        D_ld[static_cast<std::size_t>(i) * np + a] = lb.value(a, x, y);
      }
    }
  }

  if (p >= 2) {
    // moment rows of D and the Laplacian expansion behind the internal
    // part of B, from one shared rule; the moment-mass solve runs at 113
    // bits so the expansion residual stays below the pipeline precision
    std::vector<LD> mval(static_cast<std::size_t>(I_d) * nq);
    std::vector<LD> bval(static_cast<std::size_t>(np) * nq);
    for (std::size_t q = 0; q < nq; ++q) {
      for (int g = 0; g < I_d; ++g)
        mval[static_cast<std::size_t>(g) * nq + q] =
            lmb.value(g, lrule.x[q], lrule.y[q]);
      for (int a = 0; a < np; ++a)
        bval[static_cast<std::size_t>(a) * nq + q] =
            lb.value(a, lrule.x[q], lrule.y[q]);
    }
    for (int g = 0; g < I_d; ++g)
      for (int b = 0; b < np; ++b) {
        LD s = 0;
        for (std::size_t q = 0; q < nq; ++q)
          s += lrule.w[q] * mval[static_cast<std::size_t>(g) * nq + q] *
               bval[static_cast<std::size_t>(b) * nq + q];
        D_ld[static_cast<std::size_t>(ops.layout.boundary_count + g) * np + b] =
            s / area_ld;
      }

    quad_ops::Mat M(I_d, I_d), R(I_d, np);
    for (int g = 0; g < I_d; ++g)
      for (int h = g; h < I_d; ++h) {
        LD s = 0;
        for (std::size_t q = 0; q < nq; ++q)
          s += lrule.w[q] * mval[static_cast<std::size_t>(g) * nq + q] *
               mval[static_cast<std::size_t>(h) * nq + q];
        M.at(g, h) = s;
        M.at(h, g) = s;
      }
    for (int a = 0; a < np; ++a) {
      if (lb.total(a) <= 1) {
        for (int g = 0; g < I_d; ++g) R.at(g, a) = 0;
        continue;
      }
      for (int g = 0; g < I_d; ++g) {
        LD s = 0;
        for (std::size_t q = 0; q < nq; ++q)
          s += lrule.w[q] * mval[static_cast<std::size_t>(g) * nq + q] *
               lb.laplacian(a, lrule.x[q], lrule.y[q]);
        R.at(g, a) = s;
      }
    }
    quad_ops::Mat C = quad_ops::solve(M, R, cell);
    for (int a = 0; a < np; ++a)
      for (int g = 0; g < I_d; ++g)
        B_ld[static_cast<std::size_t>(a) * G_d + ops.layout.boundary_count +
             g] = -static_cast<LD>(C.at(g, a)) * area_ld;
  }

  quad_ops::Mat Bq_raw(np, G_d), Dq(G_d, np);
  for (int a = 0; a < np; ++a)
    for (int i = 0; i < G_d; ++i)
      Bq_raw.at(a, i) = B_ld[static_cast<std::size_t>(a) * G_d + i];
  for (int i = 0; i < G_d; ++i)
    for (int b = 0; b < np; ++b)
      Dq.at(i, b) = D_ld[static_cast<std::size_t>(i) * np + b];
  ops.B_raw = quad_ops::to_eigen(Bq_raw);
  ops.D_mat = quad_ops::to_eigen(Dq);
  ops.D_ext.resize(G_d, np);
  for (int i = 0; i < G_d; ++i)
    for (int b = 0; b < np; ++b)
      ops.D_ext(i, b) = D_ld[static_cast<std::size_t>(i) * np + b];

  // constrained projector system: first Gram row replaced by the averaging
  // functional on both sides
  ops.B_mat = ops.B_raw;
  ops.B_mat.row(0).setZero();
  if (p == 1) {
    for (int i = 0; i < nv; ++i) {
      int prev = (i + nv - 1) % nv;
      ops.B_mat(0, i) = static_cast<double>(
          0.5L * (edge_len[prev] + edge_len[i]) / perimeter);
    }
  } else {
    // mean(phi_i) = constant-moment dof / value of the constant member
    LD m0 = lmb.value(0, ops.geom.barycenter.x(), ops.geom.barycenter.y());
    ops.B_mat(0, ops.layout.boundary_count) = static_cast<double>(1.0L / m0);
  }

  // B_raw . D is the gradient Gram a^K(q_a, q_b) twice over, once per
  // integration-by-parts direction. Quadrature round-off leaves the two
  // directions inconsistent at ~1e-15, which the projector coefficients
  // amplify by their own magnitude. Replace B by the nearest matrix whose
  // product with D is exactly symmetric; the correction is orders of
  // magnitude below the accuracy of the boundary integrals themselves.
  quad_ops::Mat G0q = quad_ops::mul(Bq_raw, Dq);
  quad_ops::Mat M(np, np);
  for (int a = 0; a < np; ++a)
    for (int b = 0; b < np; ++b) {
      __float128 sym = (G0q.at(a, b) + G0q.at(b, a)) / 2;
      M.at(a, b) = sym - G0q.at(a, b);
      G0q.at(a, b) = sym;
    }
  {
    quad_ops::Mat N = quad_ops::mul(quad_ops::transpose(Dq), Dq);
    quad_ops::Mat W = quad_ops::solve(N, quad_ops::transpose(Dq), cell);
    quad_ops::Mat E = quad_ops::mul(M, W);
    for (int a = 0; a < np; ++a)
      for (int i = 0; i < G_d; ++i) Bq_raw.at(a, i) += E.at(a, i);
  }
  ops.G0 = quad_ops::to_eigen(G0q);

  quad_ops::Mat Bq = Bq_raw;
  {
    Eigen::MatrixXd row0 = ops.B_mat.row(0);
    for (int i = 0; i < G_d; ++i) Bq.at(0, i) = row0(i);
  }

  quad_ops::Mat Gq = G0q;
  for (int b = 0; b < np; ++b) {
    __float128 s = 0;
    for (int i = 0; i < G_d; ++i) s += Bq.at(0, i) * Dq.at(i, b);
    Gq.at(0, b) = s;
  }
  ops.G_mat = quad_ops::to_eigen(Gq);

  quad_ops::Mat Piq = quad_ops::solve(Gq, Bq, cell);
  ops.Pi_star = quad_ops::to_eigen(Piq);
  ops.Pi_ext.resize(np, G_d);
  for (int a = 0; a < np; ++a)
    for (int i = 0; i < G_d; ++i)
      ops.Pi_ext(a, i) = static_cast<long double>(Piq.at(a, i));

  quad_ops::Mat R = quad_ops::mul(Dq, Piq);
  for (int i = 0; i < G_d; ++i)
    for (int j = 0; j < G_d; ++j)
      R.at(i, j) = (i == j ? __float128(1) : __float128(0)) - R.at(i, j);
  quad_ops::Mat A = quad_ops::add(
      quad_ops::mul(quad_ops::transpose(Piq), quad_ops::mul(G0q, Piq)),
      quad_ops::mul(quad_ops::transpose(R), R));
  quad_ops::symmetrize(A);
  ops.A_hat = quad_ops::to_eigen(A);
  ops.A_ext.resize(G_d, G_d);
  ops.A_ext_lo.resize(G_d, G_d);
  for (int i = 0; i < G_d; ++i)
    for (int j = 0; j < G_d; ++j) {
      long double hi = static_cast<long double>(A.at(i, j));
      ops.A_ext(i, j) = hi;
      ops.A_ext_lo(i, j) = static_cast<long double>(A.at(i, j) - hi);
    }

  // defect against the uncorrected integration-by-parts values
  quad_ops::Mat defect = quad_ops::mul(quad_ops::transpose(Dq), A);
  for (int b = 0; b < np; ++b)
    for (int i = 0; i < G_d; ++i)
      defect.at(b, i) -= B_ld[static_cast<std::size_t>(b) * G_d + i];
  ops.consistency_defect = quad_ops::to_eigen(defect);

  ops.f_local = compute_local_load(mesh, cell, ops, f);
  return ops;
}

Eigen::VectorXd compute_local_load(const PolygonMesh& mesh, int cell,
                                   const LocalOperators& ops,
                                   const ScalarField& f) {
  const int G_d = ops.layout.total;
  const int I_d = ops.layout.internal_count;
  const int p = ops.layout.p;
  Eigen::VectorXd fl = Eigen::VectorXd::Zero(G_d);
  if (!f) return fl;
  PolygonRule load_rule = polygon_rule(mesh, cell, 2 * p + 4);
  if (p >= 2) {
    const PolyBasis& mb = *ops.moment_basis;
    Eigen::MatrixXd M(I_d, I_d);
    Eigen::VectorXd rhs(I_d);
    for (int i = 0; i < I_d; ++i) {
      for (int j = i; j < I_d; ++j) {
        double v = load_rule.integrate([&](const Vec2& x) {
          return mb.value(i, x) * mb.value(j, x);
        });
        M(i, j) = v;
        M(j, i) = v;
      }
      rhs(i) = load_rule.integrate(
          [&](const Vec2& x) { return f(x) * mb.value(i, x); });
    }
    Eigen::VectorXd cf = M.ldlt().solve(rhs);
    for (int g = 0; g < I_d; ++g)
      fl(ops.layout.boundary_count + g) = ops.geom.area * cf(g);
  } else {
    double fbar = load_rule.integrate([&](const Vec2& x) { return f(x); }) /
                  ops.geom.area;
    const int nv = ops.layout.vertex_count;
    const auto& loop = mesh.cells[cell];
    std::vector<double> elen(nv);
    double perim = 0.0;
    for (int e = 0; e < nv; ++e) {
      elen[e] = (mesh.vertices[loop[(e + 1) % nv]] - mesh.vertices[loop[e]])
                    .norm();
      perim += elen[e];
    }
    for (int i = 0; i < nv; ++i) {
      int prev = (i + nv - 1) % nv;
      double mean_phi = 0.5 * (elen[prev] + elen[i]) / perim;
      fl(i) = fbar * mean_phi * ops.geom.area;
    }
  }
  return fl;
}

Eigen::VectorXd interpolate_dofs(const PolygonMesh& mesh, int cell,
                                 const LocalOperators& ops,
                                 const ScalarField& u) {
  const int G_d = ops.layout.total;
  Eigen::VectorXd dofs(G_d);
  for (int i = 0; i < ops.layout.boundary_count; ++i)
    dofs(i) = u(ops.layout.dofs[i].location);
  if (ops.layout.internal_count > 0) {
    PolygonRule rule = polygon_rule(mesh, cell, 2 * ops.layout.p + 4);
    for (int g = 0; g < ops.layout.internal_count; ++g)
      dofs(ops.layout.boundary_count + g) =
          rule.integrate([&](const Vec2& x) {
            return ops.moment_basis->value(g, x) * u(x);
          }) /
          ops.geom.area;
  }
  return dofs;
}

ConsistencyReport project_l2_check(const LocalOperators& ops) {
  ConsistencyReport rep;
  const int np = ops.basis->size();
  const int G_d = ops.layout.total;
  for (int b = 0; b < np; ++b) {
    double scale = std::max(1.0, std::sqrt(ops.G0(b, b)));
    for (int i = 0; i < G_d; ++i) {
      double err = std::abs(ops.consistency_defect(b, i)) / scale;
      rep.max_violation = std::max(rep.max_violation, err);
      if (err > 1e-10) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace polyvem
