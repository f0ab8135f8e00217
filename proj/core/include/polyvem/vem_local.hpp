// Per-element machinery: dof layout (vertex values, interior Gauss-Lobatto
// edge values, scaled internal moments), the energy projector onto P_p,
// the stabilized local stiffness matrix and the projected load vector.

#ifndef POLYVEM_VEM_LOCAL_HPP
#define POLYVEM_VEM_LOCAL_HPP

#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "polyvem/mesh.hpp"
#include "polyvem/poly_basis.hpp"
#include "polyvem/quadrature.hpp"

namespace polyvem {

struct VemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ScalarField = std::function<double(const Vec2&)>;

enum class DofKind { vertex, edge, internal };

struct DofDescriptor {
  DofKind kind = DofKind::vertex;
  int entity = -1;        // local vertex index / local edge index / -1
  int sub = -1;           // node index on the edge (0..p-2) or moment index
  Vec2 location{0, 0};    // geometric location (vertex and edge dofs)
};

/// Local dof enumeration: vertex block, edge block (cell loop order, nodes
/// by increasing edge parameter), internal moment block.
struct DofLayout {
  int p = 1;
  int vertex_count = 0;
  int boundary_count = 0;   // p * N_V
  int internal_count = 0;   // dim P_{p-2}
  int total = 0;
  std::vector<DofDescriptor> dofs;
};

DofLayout build_dof_layout(const PolygonMesh& mesh, int cell, int p);

struct LocalOperators {
  DofLayout layout;
  CellGeometry geom;
  std::shared_ptr<PolyBasis> basis;         // degree p
  std::shared_ptr<PolyBasis> moment_basis;  // degree p-2 (null for p=1)

  Eigen::MatrixXd Pi_star;  // (dim P_p) x G_d, projector coefficients
  // same matrix at extended precision: the rows reach 1e7 and beyond on
  // stretched cells at large p, so applying the rounded double copy to a
  // dof vector loses the cancellation digits the error norms live on
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> Pi_ext;
  Eigen::MatrixXd G_mat;    // constrained gradient Gram (row 0 = averaging)
  Eigen::MatrixXd G0;       // unconstrained gradient Gram
  Eigen::MatrixXd B_mat;    // constrained right-hand side of the projector
  Eigen::MatrixXd B_raw;    // unconstrained B: a(q_a, phi_i) by parts
  Eigen::MatrixXd D_mat;    // G_d x (dim P_p), dof values of basis polys
  // D at construction precision: the exact dof representation of the basis
  // polynomials, needed when applying Pi_ext without point-evaluation noise
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> D_ext;
  Eigen::MatrixXd A_hat;    // stabilized local stiffness
  // A_hat at the construction precision, split into a long double value
  // plus a long double tail (their sum recovers ~32 significant digits):
  // stabilizer entries reach 1e10 on stretched cells at large p, so even
  // long double storage would cost the solver two digits
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> A_ext;
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> A_ext_lo;
  // a^K(q_a, phi_i) through A_hat minus the integration-by-parts value,
  // recorded at the working precision of the construction. For the raw
  // monomial basis at large p the stabilizer carries O(1e8) entries, so
  // the identity cannot be re-verified from the rounded double matrices.
  Eigen::MatrixXd consistency_defect;
  Eigen::VectorXd f_local;

  /// Value of Pi^nabla(u_h) at x for a local dof vector.
  double projected_value(const Eigen::VectorXd& dofs, const Vec2& x) const;
  Vec2 projected_gradient(const Eigen::VectorXd& dofs, const Vec2& x) const;
};

/// Builds projector, stiffness and (when f is set) load for one cell.
LocalOperators build_local_operators(const PolygonMesh& mesh, int cell, int p,
                                     BasisKind kind,
                                     const ScalarField& f = nullptr);

/// Load vector for a new right-hand side against existing local operators
/// (the P_{p-2} moment projection of f, or the vertex-average rule at p=1).
Eigen::VectorXd compute_local_load(const PolygonMesh& mesh, int cell,
                                   const LocalOperators& ops,
                                   const ScalarField& f);

/// Dof-residual stabilizer contribution (I - Pi_dof)^T (I - Pi_dof).
Eigen::MatrixXd stabilizer(const Eigen::MatrixXd& D_mat,
                           const Eigen::MatrixXd& Pi_star);

/// Dof vector of a known smooth function (nodal values plus moments).
Eigen::VectorXd interpolate_dofs(const PolygonMesh& mesh, int cell,
                                 const LocalOperators& ops,
                                 const ScalarField& u);

struct ConsistencyReport {
  double max_violation = 0.0;   // scaled by the member's energy norm
  int violations = 0;           // entries above 1e-10
};

/// Executable p-consistency check: compares a(q, phi_i) computed by parts
/// with the discrete form through A_hat, for every basis member q.
ConsistencyReport project_l2_check(const LocalOperators& ops);

}  // namespace polyvem

#endif
