// Gram-Schmidt orthonormalization of the internal dofs against the
// discrete local bilinear form, using only the entries of the local
// stiffness matrix (the functions being orthonormalized are never
// evaluated), and the congruent transformation of the local system.

#ifndef POLYVEM_GRAM_SCHMIDT_HPP
#define POLYVEM_GRAM_SCHMIDT_HPP

#include <stdexcept>

#include <Eigen/Dense>

namespace polyvem {

struct GramSchmidtError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GSTransform {
  int boundary_count = 0;
  int internal_count = 0;
  Eigen::MatrixXd Lambda;       // I_d x I_d unit lower triangular
  Eigen::VectorXd D_half_inv;   // |diag(Lambda A_II Lambda^T)|^{-1/2}

  /// Full transform [[I, 0], [0, Lambda * D_half_inv]].
  Eigen::MatrixXd full() const;
};

/// Orthogonalizes the internal block of A_hat by the literal Gram-Schmidt
/// recursion on scalar products; throws when a pivot collapses below
/// 1e-14 of the largest diagonal entry.
GSTransform virtual_gram_schmidt(const Eigen::MatrixXd& A_hat, int boundary_count,
                                 int internal_count);

Eigen::MatrixXd transform_stiffness(const Eigen::MatrixXd& A_hat,
                                    const GSTransform& t);
Eigen::VectorXd transform_load(const Eigen::VectorXd& f_local,
                               const GSTransform& t);
Eigen::VectorXd untransform_solution(const Eigen::VectorXd& coeffs,
                                     const GSTransform& t);

}  // namespace polyvem

#endif
