#include "polyvem/gram_schmidt.hpp"

#include <cmath>

namespace polyvem {

Eigen::MatrixXd GSTransform::full() const {
  const int n = boundary_count + internal_count;
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n);
  if (internal_count > 0)
    L.block(boundary_count, boundary_count, internal_count, internal_count) =
        D_half_inv.asDiagonal() * Lambda;
  return L;
}

GSTransform virtual_gram_schmidt(const Eigen::MatrixXd& A_hat,
                                 int boundary_count, int internal_count) {
  if (boundary_count + internal_count != A_hat.rows() ||
      A_hat.rows() != A_hat.cols())
    throw GramSchmidtError("block sizes inconsistent with A_hat");

  GSTransform t;
  t.boundary_count = boundary_count;
  t.internal_count = internal_count;
  t.Lambda = Eigen::MatrixXd::Identity(internal_count, internal_count);
  t.D_half_inv = Eigen::VectorXd::Ones(internal_count);
  if (internal_count == 0) return t;

  const Eigen::MatrixXd A_II =
      A_hat.block(boundary_count, boundary_count, internal_count, internal_count);
  const double diag_max = A_II.diagonal().cwiseAbs().maxCoeff();

  // pivots a(phi~_j, phi~_j), filled as the recursion advances
  Eigen::VectorXd pivot(internal_count);
  for (int l = 0; l < internal_count; ++l) {
    for (int k = l - 1; k >= 0; --k) {
      double s = 0.0;
      for (int j = k; j < l; ++j) {
        // a(phi_l, phi~_j) = A_II(l,:) Lambda^T(:,j)
        double num = A_II.row(l).dot(t.Lambda.row(j));
        s -= t.Lambda(j, k) * num / pivot(j);
      }
      t.Lambda(l, k) = s;
    }
    pivot(l) = t.Lambda.row(l) * A_II * t.Lambda.row(l).transpose();
    if (std::abs(pivot(l)) <= 1e-14 * diag_max)
      throw GramSchmidtError(
          "gram-schmidt pivot collapsed at internal dof " + std::to_string(l));
    t.D_half_inv(l) = 1.0 / std::sqrt(std::abs(pivot(l)));
  }
  return t;
}

Eigen::MatrixXd transform_stiffness(const Eigen::MatrixXd& A_hat,
                                    const GSTransform& t) {
  if (t.internal_count == 0) return A_hat;
  Eigen::MatrixXd L = t.full();
  return L * A_hat * L.transpose();
}

Eigen::VectorXd transform_load(const Eigen::VectorXd& f_local,
                               const GSTransform& t) {
  if (t.internal_count == 0) return f_local;
  return t.full() * f_local;
}

Eigen::VectorXd untransform_solution(const Eigen::VectorXd& coeffs,
                                     const GSTransform& t) {
  if (t.internal_count == 0) return coeffs;
  return t.full().transpose() * coeffs;
}

}  // namespace polyvem
