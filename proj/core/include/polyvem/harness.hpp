// Test problems, projector-based error norms, and the h/p/basis/GS study
// drivers with CSV report emission.

#ifndef POLYVEM_HARNESS_HPP
#define POLYVEM_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "polyvem/assembly.hpp"

namespace polyvem {

using VectorField = std::function<Vec2(const Vec2&)>;

struct TestCase {
  std::string name;
  ScalarField exact;
  VectorField exact_gradient;
  ScalarField load;          // null means f == 0
  bool homogeneous_bc = false;
  std::string regularity;    // analytic | sobolev | polynomial
};

/// Named cases: "sinsin", "corner25", "patch".
TestCase make_test_case(const std::string& name);

enum class MeshFamily { triangle, square, hex, voronoi };
MeshFamily family_from_string(const std::string& s);
std::string to_string(MeshFamily f);

/// Desk-scale mesh of a family with ~n^2 cells (n rows/seeds per side).
/// Deterministic in seed; voronoi uses n*n seeds and `lloyd` iterations.
PolygonMesh make_family_mesh(MeshFamily family, int n, std::uint64_t seed = 7,
                             int lloyd = 100);

double mesh_size(const PolygonMesh& mesh);

struct ErrorPair {
  double h1_broken = 0.0;
  double l2 = 0.0;
};

/// || u - Pi u_h || norms from the per-cell projected reconstruction.
ErrorPair error_norms(const PolygonMesh& mesh, const GlobalSystem& system,
                      const Eigen::VectorXd& solution, const TestCase& tc);

struct StudyRow {
  std::string case_name;
  std::string family;
  int n = 0;
  int p = 0;
  std::string basis;
  bool gs = false;
  double h = 0.0;
  int ndof = 0;
  double err_h1 = 0.0;
  double err_l2 = 0.0;
  double cond = 0.0;      // 0 when not computed
  double residual = 0.0;
  bool at_floor = false;  // excluded from slope fits
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::optional<double> slope_h1;
  std::optional<double> slope_l2;

  void write_csv(const std::string& path) const;
  void write_gnuplot(const std::string& path, const std::string& csv_path) const;
};

struct SolveOptions {
  BasisKind basis = BasisKind::monomial_q1;
  bool use_gs = false;
  bool with_cond = false;
  std::uint64_t seed = 7;
  int lloyd = 100;
};

/// One (mesh, p) run; mesh is built internally from the family spec.
StudyRow run_single(const TestCase& tc, MeshFamily family, int n, int p,
                    const SolveOptions& opts);
StudyRow run_single(const TestCase& tc, const PolygonMesh& mesh,
                    const std::string& family_name, int n, int p,
                    const SolveOptions& opts);

/// Fixed p, n sweep; slopes fitted on log err vs log h over rows above
/// the patch-case algebraic floor.
StudyReport h_study(const TestCase& tc, MeshFamily family, int p,
                    const std::vector<int>& n_list, const SolveOptions& opts);

/// Fixed mesh, p sweep; for corner25 the H1 slope is fitted on
/// log err vs log p over the pre-floor range.
StudyReport p_study(const TestCase& tc, MeshFamily family, int n,
                    const std::vector<int>& p_list, const SolveOptions& opts);

/// Same p sweep on a caller-supplied mesh.
StudyReport p_study(const TestCase& tc, const PolygonMesh& mesh,
                    const std::string& family_name, int n,
                    const std::vector<int>& p_list, const SolveOptions& opts);

/// Condition/error rows for all three bases over a p sweep.
StudyReport basis_comparison(const TestCase& tc,
                             const std::vector<MeshFamily>& families, int n,
                             const std::vector<int>& p_list,
                             const SolveOptions& opts);

/// q2 versus Gram-Schmidt rows over a p sweep.
StudyReport gs_comparison(const TestCase& tc,
                          const std::vector<MeshFamily>& families, int n,
                          const std::vector<int>& p_list,
                          const SolveOptions& opts);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace polyvem

#endif
