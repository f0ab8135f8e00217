// Global dof numbering, Dirichlet elimination with lifting, sparse SPD
// assembly, direct Cholesky solve and dense condition-number estimation.

#ifndef POLYVEM_ASSEMBLY_HPP
#define POLYVEM_ASSEMBLY_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "polyvem/gram_schmidt.hpp"
#include "polyvem/vem_local.hpp"

namespace polyvem {

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cell-local to global dof index map. Vertex dofs are shared by all
/// incident cells; edge dofs are shared pairwise with the global node
/// order taken along the low -> high vertex-index direction; internal
/// dofs are cell-private.
struct DofMap {
  int p = 1;
  int total = 0;
  std::vector<std::vector<int>> cell_dofs;  // local index -> global index
  std::vector<bool> is_boundary;            // global flag
  std::vector<Vec2> location;               // boundary-type dofs only (else 0)
  std::vector<bool> has_location;

  int free_count() const;
};

DofMap number_dofs(const PolygonMesh& mesh, int p);

struct GlobalSystem {
  DofMap dof_map;
  Eigen::SparseMatrix<double> stiffness;  // free dofs only
  Eigen::VectorXd rhs;
  // extended-precision copies used by the solver: the local stiffness
  // carries entries up to 1e8 on ill-conditioned cells, and solving the
  // double-rounded system caps the attainable dof accuracy near 1e-9
  Eigen::SparseMatrix<long double> stiffness_ext;
  Eigen::Matrix<long double, Eigen::Dynamic, 1> rhs_ext;
  // value + tail representation of the same system (their sums recover the
  // construction precision); the refinement residual is accumulated against
  // these so the factorization precision never limits the solution
  std::vector<int> ext_rows, ext_cols;
  std::vector<long double> ext_vals, ext_vals_lo;
  Eigen::Matrix<long double, Eigen::Dynamic, 1> rhs_ext_lo;
  Eigen::VectorXd lifting;                // full-length, boundary dof values
  std::vector<int> free_index;            // global dof -> free index or -1
  std::vector<LocalOperators> local_ops;  // per cell
  std::vector<GSTransform> gs;            // per cell (empty if unused)
  bool use_gs = false;
  mutable double solve_residual = 0.0;    // relative, set by solve()
};

/// Assembles the stiffness and load of the discrete problem with Dirichlet
/// data interpolated at boundary vertex/Gauss-Lobatto nodes (and boundary
/// edge moments for the trace, which vanish for homogeneous data).
/// `dirichlet` may be null for homogeneous conditions.
GlobalSystem assemble(const PolygonMesh& mesh, int p, BasisKind kind,
                      const ScalarField& f, const ScalarField& dirichlet,
                      bool use_gs = false);

/// Same discrete operator, new data: reuses the local operators and the
/// assembled stiffness of `base` and rebuilds only load and lifting. The
/// operator construction dominates assembly cost, so this is the cheap way
/// to solve a second problem on the same mesh/degree/basis.
GlobalSystem reassemble(const GlobalSystem& base, const PolygonMesh& mesh,
                        const ScalarField& f, const ScalarField& dirichlet);

/// Direct sparse Cholesky solve; returns the full-length dof vector in the
/// original (untransformed) basis, boundary values included.
Eigen::VectorXd solve(const GlobalSystem& system);

/// 2-norm condition number of the eliminated stiffness matrix by dense
/// symmetric eigen-decomposition; free-dof count capped at 5000.
double condition_number(const GlobalSystem& system);

}  // namespace polyvem

#endif
