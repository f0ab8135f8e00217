#include "polyvem/assembly.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace polyvem {

int DofMap::free_count() const {
  int n = 0;
  for (bool b : is_boundary)
    if (!b) ++n;
  return n;
}

DofMap number_dofs(const PolygonMesh& mesh, int p) {
  if (p < 1) throw AssemblyError("number_dofs needs p >= 1");
  DofMap map;
  map.p = p;
  const int V = mesh.vertex_count();
  const int E = static_cast<int>(mesh.edges.size());
  const int edge_nodes = p - 1;
  const int I_d = poly_space_dim(p - 2);
  map.total = V + E * edge_nodes + mesh.cell_count() * I_d;

  map.is_boundary.assign(map.total, false);
  map.location.assign(map.total, Vec2(0, 0));
  map.has_location.assign(map.total, false);

  for (int v = 0; v < V; ++v) {
    map.is_boundary[v] = mesh.boundary_vertex[v];
    map.location[v] = mesh.vertices[v];
    map.has_location[v] = true;
  }

  EdgeRule gl = (p >= 2) ? gauss_lobatto(p + 1) : EdgeRule{};
  for (int e = 0; e < E; ++e) {
    const MeshEdge& me = mesh.edges[e];
    for (int k = 0; k < edge_nodes; ++k) {
      int g = V + e * edge_nodes + k;
      map.is_boundary[g] = me.boundary();
      // node order along the low -> high vertex direction
      double t = 0.5 * (gl.nodes[k + 1] + 1.0);
      map.location[g] =
          mesh.vertices[me.v0] + t * (mesh.vertices[me.v1] - mesh.vertices[me.v0]);
      map.has_location[g] = true;
    }
  }

  map.cell_dofs.resize(mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto& loop = mesh.cells[c];
    const int nv = static_cast<int>(loop.size());
    auto& g = map.cell_dofs[c];
    for (int i = 0; i < nv; ++i) g.push_back(loop[i]);
    for (int le = 0; le < nv; ++le) {
      int a = loop[le], b = loop[(le + 1) % nv];
      int e = mesh.edge_index(a, b);
      bool forward = (mesh.edges[e].v0 == std::min(a, b)) && (a < b);
      for (int k = 0; k < edge_nodes; ++k) {
        int node = forward ? k : edge_nodes - 1 - k;
        g.push_back(V + e * edge_nodes + node);
      }
    }
    for (int m = 0; m < I_d; ++m)
      g.push_back(V + E * edge_nodes + c * I_d + m);
  }
  return map;
}

namespace {

// Rebuilds rhs / rhs_ext(_lo) from the current per-cell loads and lifting.
// Shared by assemble() and reassemble(); cheap next to operator construction.
void build_rhs(GlobalSystem& sys, const PolygonMesh& mesh) {
  const DofMap& map = sys.dof_map;
  int nf = 0;
  for (int g = 0; g < map.total; ++g)
    if (sys.free_index[g] >= 0) ++nf;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  std::vector<__float128> rhs_q(nf, __float128(0));
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const LocalOperators& ops = sys.local_ops[c];
    const int nloc = static_cast<int>(map.cell_dofs[c].size());
    Eigen::VectorXd fl = ops.f_local;
    Eigen::MatrixXd A_gs;
    if (sys.use_gs) {
      fl = transform_load(fl, sys.gs[c]);
      A_gs = transform_stiffness(ops.A_hat, sys.gs[c]);
    }
    const auto& gd = map.cell_dofs[c];
    for (int i = 0; i < nloc; ++i) {
      int fi = sys.free_index[gd[i]];
      if (fi < 0) continue;
      __float128 r = fl(i);
      for (int j = 0; j < nloc; ++j) {
        int gj = gd[j];
        if (sys.free_index[gj] >= 0) continue;
        __float128 a = sys.use_gs
                           ? static_cast<__float128>(A_gs(i, j))
                           : static_cast<__float128>(ops.A_ext(i, j)) +
                                 ops.A_ext_lo(i, j);
        r -= a * static_cast<__float128>(sys.lifting(gj));
      }
      rhs(fi) += static_cast<double>(static_cast<long double>(r));
      rhs_q[fi] += r;
    }
  }
  sys.rhs = rhs;
  sys.rhs_ext.resize(nf);
  sys.rhs_ext_lo.resize(nf);
  for (int i = 0; i < nf; ++i) {
    long double hi = static_cast<long double>(rhs_q[i]);
    sys.rhs_ext(i) = hi;
    sys.rhs_ext_lo(i) = static_cast<long double>(rhs_q[i] - hi);
  }
}

}  // namespace

GlobalSystem assemble(const PolygonMesh& mesh, int p, BasisKind kind,
                      const ScalarField& f, const ScalarField& dirichlet,
                      bool use_gs) {
  GlobalSystem sys;
  sys.dof_map = number_dofs(mesh, p);
  sys.use_gs = use_gs;
  const DofMap& map = sys.dof_map;

  sys.local_ops.reserve(mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c) {
    sys.local_ops.push_back(build_local_operators(mesh, c, p, kind, f));
    // orientation cross-check between local and global dof locations
    const LocalOperators& ops = sys.local_ops.back();
    for (int i = 0; i < ops.layout.boundary_count; ++i) {
      int g = map.cell_dofs[c][i];
      if ((map.location[g] - ops.layout.dofs[i].location).norm() > 1e-12)
        throw AssemblyError("edge dof orientation mismatch on cell " +
                            std::to_string(c));
    }
  }
  if (use_gs) {
    sys.gs.reserve(mesh.cell_count());
    for (int c = 0; c < mesh.cell_count(); ++c)
      sys.gs.push_back(virtual_gram_schmidt(
          sys.local_ops[c].A_hat, sys.local_ops[c].layout.boundary_count,
          sys.local_ops[c].layout.internal_count));
  }

  // boundary lifting from interpolated Dirichlet data
  sys.lifting.setZero(map.total);
  if (dirichlet) {
    for (int g = 0; g < map.total; ++g)
      if (map.is_boundary[g]) sys.lifting(g) = dirichlet(map.location[g]);
  }

  sys.free_index.assign(map.total, -1);
  int nf = 0;
  for (int g = 0; g < map.total; ++g)
    if (!map.is_boundary[g]) sys.free_index[g] = nf++;

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<Eigen::Triplet<long double>> trips_ext;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const LocalOperators& ops = sys.local_ops[c];
    const int nloc = static_cast<int>(map.cell_dofs[c].size());
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> A_hi =
        ops.A_ext;
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> A_lo =
        ops.A_ext_lo;
    if (use_gs) {
      A_hi = transform_stiffness(ops.A_hat, sys.gs[c]).cast<long double>();
      A_lo.setZero(nloc, nloc);
    }
    const auto& gd = map.cell_dofs[c];
    for (int i = 0; i < nloc; ++i) {
      int fi = sys.free_index[gd[i]];
      if (fi < 0) continue;
      for (int j = 0; j < nloc; ++j) {
        int fj = sys.free_index[gd[j]];
        if (fj < 0) continue;
        trips.emplace_back(fi, fj, static_cast<double>(A_hi(i, j)));
        trips_ext.emplace_back(fi, fj, A_hi(i, j));
        sys.ext_rows.push_back(fi);
        sys.ext_cols.push_back(fj);
        sys.ext_vals.push_back(A_hi(i, j));
        sys.ext_vals_lo.push_back(A_lo(i, j));
      }
    }
  }
  sys.stiffness.resize(nf, nf);
  sys.stiffness.setFromTriplets(trips.begin(), trips.end());
  sys.stiffness_ext.resize(nf, nf);
  sys.stiffness_ext.setFromTriplets(trips_ext.begin(), trips_ext.end());
  build_rhs(sys, mesh);
  return sys;
}

GlobalSystem reassemble(const GlobalSystem& base, const PolygonMesh& mesh,
                        const ScalarField& f, const ScalarField& dirichlet) {
  GlobalSystem sys = base;
  for (int c = 0; c < mesh.cell_count(); ++c)
    sys.local_ops[c].f_local =
        compute_local_load(mesh, c, sys.local_ops[c], f);
  sys.lifting.setZero(sys.dof_map.total);
  if (dirichlet) {
    for (int g = 0; g < sys.dof_map.total; ++g)
      if (sys.dof_map.is_boundary[g])
        sys.lifting(g) = dirichlet(sys.dof_map.location[g]);
  }
  build_rhs(sys, mesh);
  return sys;
}

Eigen::VectorXd solve(const GlobalSystem& sys) {
  const DofMap& map = sys.dof_map;
  const int nf = static_cast<int>(sys.rhs.size());
  using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  VecLD free_sol = VecLD::Zero(nf);
  sys.solve_residual = 0.0;
  if (nf > 0) {
    // the factorization runs on the extended-precision copy; double
    // storage of stiffness entries up to 1e8 would cap the attainable
    // dof accuracy around 1e-9 on ill-conditioned bases
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<long double>> chol(
        sys.stiffness_ext);
    if (chol.info() != Eigen::Success)
      throw AssemblyError("sparse factorization failed");
    free_sol = chol.solve(sys.rhs_ext);
    long double bn = sys.rhs_ext.norm();
    if (bn > 0) {
      // iterative refinement with 113-bit residual accumulation: the
      // correction reuses the factorization, so the residual floor is set
      // by the refinement precision rather than by the solve precision
      std::vector<__float128> x(nf);
      for (int i = 0; i < nf; ++i) x[i] = free_sol(i);
      auto residual = [&](const std::vector<__float128>& xq,
                          std::vector<__float128>& r) {
        for (int i = 0; i < nf; ++i)
          r[i] = static_cast<__float128>(sys.rhs_ext(i)) + sys.rhs_ext_lo(i);
        for (std::size_t t = 0; t < sys.ext_rows.size(); ++t) {
          __float128 a = static_cast<__float128>(sys.ext_vals[t]) +
                         sys.ext_vals_lo[t];
          r[sys.ext_rows[t]] -= a * xq[sys.ext_cols[t]];
        }
        __float128 nrm = 0;
        for (int i = 0; i < nf; ++i) nrm += r[i] * r[i];
        return std::sqrt(static_cast<long double>(nrm)) / bn;
      };
      std::vector<__float128> r(nf), r2(nf);
      long double res = residual(x, r);
      for (int it = 0; it < 20 && res > 1e-20L; ++it) {
        VecLD rl(nf);
        for (int i = 0; i < nf; ++i) rl(i) = static_cast<long double>(r[i]);
        VecLD dx = chol.solve(rl);
        std::vector<__float128> candidate = x;
        for (int i = 0; i < nf; ++i) candidate[i] += dx(i);
        long double res2 = residual(candidate, r2);
        if (res2 >= res) break;
        x.swap(candidate);
        res = res2;
        r.swap(r2);
      }
      for (int i = 0; i < nf; ++i) free_sol(i) = static_cast<long double>(x[i]);
      sys.solve_residual = static_cast<double>(res);
      if (res > 1e-12L) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3e", static_cast<double>(res));
        throw AssemblyError(std::string("solver residual too large: ") + buf);
      }
    }
  }

  Eigen::VectorXd full = sys.lifting;
  for (int g = 0; g < map.total; ++g)
    if (sys.free_index[g] >= 0)
      full(g) = static_cast<double>(free_sol(sys.free_index[g]));

  if (sys.use_gs) {
    // internal coefficients are in the per-cell transformed basis; map the
    // whole local vector back (boundary entries are untouched by the map)
    for (std::size_t c = 0; c < sys.local_ops.size(); ++c) {
      const auto& gd = sys.dof_map.cell_dofs[c];
      Eigen::VectorXd loc(gd.size());
      for (std::size_t i = 0; i < gd.size(); ++i) loc(i) = full(gd[i]);
      Eigen::VectorXd orig = untransform_solution(loc, sys.gs[c]);
      int bc = sys.local_ops[c].layout.boundary_count;
      for (std::size_t i = bc; i < gd.size(); ++i) full(gd[i]) = orig(i);
    }
  }
  return full;
}

double condition_number(const GlobalSystem& sys) {
  const int nf = static_cast<int>(sys.rhs.size());
  if (nf > 5000)
    throw AssemblyError("condition_number capped at 5000 free dofs, got " +
                        std::to_string(nf));
  if (nf == 0) return 1.0;
  Eigen::MatrixXd dense = Eigen::MatrixXd(sys.stiffness);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense,
                                                     Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = eig.eigenvalues().cwiseAbs();
  double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace polyvem
