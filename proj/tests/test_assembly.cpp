#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "polyvem/assembly.hpp"
#include "polyvem/harness.hpp"

using namespace polyvem;

TEST_CASE("global dof counts") {
  auto m = generate_square_mesh(2);
  auto map1 = number_dofs(m, 1);
  CHECK(map1.total == 9);
  int constrained = 0;
  for (bool b : map1.is_boundary)
    if (b) ++constrained;
  CHECK(constrained == 8);
  CHECK(map1.free_count() == 1);

  auto map2 = number_dofs(m, 2);
  CHECK(map2.total == 9 + 12 + 4);
  CHECK(map2.free_count() == 25 - 16);
}

TEST_CASE("shared edge dofs coincide geometrically") {
  auto m = generate_voronoi_lloyd(16, 50, 21);
  int p = 4;
  auto map = number_dofs(m, p);
  for (int c = 0; c < m.cell_count(); ++c) {
    auto layout = build_dof_layout(m, c, p);
    for (int i = 0; i < layout.boundary_count; ++i) {
      int g = map.cell_dofs[c][i];
      CHECK((map.location[g] - layout.dofs[i].location).norm() <= 1e-13);
    }
  }
}

TEST_CASE("zero data gives the zero solution") {
  auto m = generate_square_mesh(3);
  auto sys = assemble(m, 2, BasisKind::monomial_q1,
                      [](const Vec2&) { return 0.0; }, nullptr);
  auto sol = solve(sys);
  CHECK(sol.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("patch test reproduces a quadratic exactly") {
  TestCase patch = make_test_case("patch");
  for (auto family : {MeshFamily::square, MeshFamily::hex}) {
    auto m = make_family_mesh(family, 4, 3, 50);
    for (int p : {2, 3}) {
      auto sys = assemble(m, p, BasisKind::monomial_q1, patch.load, patch.exact);
      auto sol = solve(sys);
      // compare against the interpolated exact dofs
      for (int c = 0; c < m.cell_count(); ++c) {
        Eigen::VectorXd exact_dofs =
            interpolate_dofs(m, c, sys.local_ops[c], patch.exact);
        const auto& gd = sys.dof_map.cell_dofs[c];
        for (std::size_t i = 0; i < gd.size(); ++i)
          CHECK(std::abs(sol(gd[i]) - exact_dofs(i)) < 1e-9);
      }
    }
  }
}

TEST_CASE("degenerate empty system") {
  auto m = generate_square_mesh(1);
  auto sys = assemble(m, 1, BasisKind::monomial_q1,
                      [](const Vec2&) { return 1.0; }, nullptr);
  CHECK(sys.rhs.size() == 0);
  auto sol = solve(sys);
  CHECK(sol.size() == 4);
  CHECK(sol.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sparse solve matches a dense oracle") {
  auto m = generate_triangle_mesh(4, 9);
  TestCase tc = make_test_case("sinsin");
  auto sys = assemble(m, 2, BasisKind::monomial_q1, tc.load, nullptr);
  auto sol = solve(sys);
  Eigen::MatrixXd dense = Eigen::MatrixXd(sys.stiffness);
  Eigen::VectorXd ref = dense.ldlt().solve(sys.rhs);
  for (int g = 0; g < sys.dof_map.total; ++g)
    if (sys.free_index[g] >= 0)
      CHECK(std::abs(sol(g) - ref(sys.free_index[g])) < 1e-10);
}

TEST_CASE("assembly is independent of cell order") {
  auto base = generate_voronoi_lloyd(9, 30, 2);
  TestCase tc = make_test_case("sinsin");
  auto sys1 = assemble(base, 3, BasisKind::monomial_q1, tc.load, nullptr);

  PolygonMesh shuffled = base;
  std::mt19937_64 rng(8);
  std::shuffle(shuffled.cells.begin(), shuffled.cells.end(), rng);
  shuffled.finalize();
  auto sys2 = assemble(shuffled, 3, BasisKind::monomial_q1, tc.load, nullptr);

  // compare solutions at the shared vertex dofs
  auto sol1 = solve(sys1);
  auto sol2 = solve(sys2);
  for (int v = 0; v < base.vertex_count(); ++v)
    CHECK(std::abs(sol1(v) - sol2(v)) < 1e-10);
}

TEST_CASE("constant boundary data is reproduced exactly") {
  auto m = generate_hex_mesh(4);
  auto sys = assemble(m, 2, BasisKind::monomial_q1, nullptr,
                      [](const Vec2&) { return 3.0; });
  auto sol = solve(sys);
  for (int v = 0; v < m.vertex_count(); ++v)
    CHECK(sol(v) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("condition number basics") {
  // identity and diag(1,10) through the public interface would need a
  // hand-built system; check the dense path directly on assembled systems
  auto m = generate_square_mesh(4);
  TestCase tc = make_test_case("sinsin");
  auto sys = assemble(m, 1, BasisKind::monomial_q1, tc.load, nullptr);
  double c = condition_number(sys);
  CHECK(c >= 1.0);
  CHECK(std::isfinite(c));

  Eigen::MatrixXd dense = Eigen::MatrixXd(sys.stiffness);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
  double ref = eig.eigenvalues().cwiseAbs().maxCoeff() /
               eig.eigenvalues().cwiseAbs().minCoeff();
  CHECK(c == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("q1 conditioning is worse than q2 at high p") {
  auto m = generate_square_mesh(4);
  TestCase tc = make_test_case("sinsin");
  for (int p : {5, 6}) {
    auto s1 = assemble(m, p, BasisKind::monomial_q1, tc.load, nullptr);
    auto s2 = assemble(m, p, BasisKind::l2scaled_q2, tc.load, nullptr);
    CHECK(condition_number(s1) >= condition_number(s2));
  }
}

TEST_CASE("gram-schmidt pipeline leaves the solution unchanged") {
  TestCase tc = make_test_case("sinsin");
  for (int p : {2, 3, 5}) {
    auto m = generate_square_mesh(4);
    auto plain = assemble(m, p, BasisKind::monomial_q1, tc.load, nullptr);
    auto gs = assemble(m, p, BasisKind::monomial_q1, tc.load, nullptr, true);
    auto sol_plain = solve(plain);
    auto sol_gs = solve(gs);
    // boundary-type dofs agree; internal dofs are mapped back as well
    double scale = sol_plain.cwiseAbs().maxCoeff();
    for (int v = 0; v < m.vertex_count(); ++v)
      CHECK(std::abs(sol_plain(v) - sol_gs(v)) <= 1e-8 * std::max(1.0, scale));
    ErrorPair e1 = error_norms(m, plain, sol_plain, tc);
    ErrorPair e2 = error_norms(m, gs, sol_gs, tc);
    CHECK(e1.h1_broken == doctest::Approx(e2.h1_broken).epsilon(1e-6));
  }
}
