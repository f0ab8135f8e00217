// Polynomial bases on a cell: shifted/scaled monomials, their L2-scaled
// variant and a tensor-Legendre basis on the cell bounding box, with
// values, gradients and Laplacians, plus moment-basis expansion of the
// Laplacian used by the projector assembly.

#ifndef POLYVEM_POLY_BASIS_HPP
#define POLYVEM_POLY_BASIS_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "polyvem/mesh.hpp"
#include "polyvem/quadrature.hpp"

namespace polyvem {

struct BasisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BasisKind { monomial_q1, l2scaled_q2, legendre_q3 };

BasisKind basis_kind_from_string(const std::string& s);
std::string to_string(BasisKind kind);

struct MultiIndex {
  int a1 = 0, a2 = 0;
  int total() const { return a1 + a2; }
};

/// Multi-indices of total degree <= p, graded order, (l,0),(l-1,1),...,(0,l)
/// within each level l.
std::vector<MultiIndex> multi_indices(int p);

inline int poly_space_dim(int p) { return p < 0 ? 0 : (p + 1) * (p + 2) / 2; }

/// A basis of P_p on one cell. Members are global polynomials; evaluation
/// anywhere in the plane is legal.
class PolyBasis {
public:
  /// For l2scaled_q2 the member norms are computed with the cell's own
  /// polygon rule of degree 2p.
  PolyBasis(BasisKind kind, int degree, const CellGeometry& geom,
            const PolygonRule& norm_rule);
  PolyBasis(BasisKind kind, int degree, const PolygonMesh& mesh, int cell);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(indices_.size()); }
  BasisKind kind() const { return kind_; }
  const MultiIndex& index(int member) const { return indices_[member]; }

  double value(int member, const Vec2& x) const;
  Vec2 gradient(int member, const Vec2& x) const;
  double laplacian(int member, const Vec2& x) const;

private:
  BasisKind kind_;
  int degree_;
  std::vector<MultiIndex> indices_;
  CellGeometry geom_;
  std::vector<double> inv_norm_;  // 1 except for q2
  // q3 bounding-box map x -> 2(x - center)/extent
  Vec2 box_center_{0, 0};
  Vec2 box_extent_{1, 1};
};

/// Coefficients c with laplacian(basis member) = sum_g c_g * moment_basis_g,
/// obtained from the moment-basis mass system under `rule`. Throws when the
/// mass system condition exceeds 1e12.
std::vector<double> laplacian_coefficients(const PolyBasis& basis, int member,
                                           const PolyBasis& moment_basis,
                                           const PolygonRule& rule);

}  // namespace polyvem

#endif
