#include <doctest.h>

#include <cmath>
#include <random>

#include "polyvem/quadrature.hpp"

using namespace polyvem;

namespace {

double edge_integrate_pow(const EdgeRule& r, int k) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i)
    s += r.weights[i] * std::pow(r.nodes[i], k);
  return s;
}

std::vector<Vec2> unit_square_poly() {
  return {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
}

std::vector<Vec2> regular_hexagon() {
  std::vector<Vec2> pts;
  for (int v = 0; v < 6; ++v)
    pts.emplace_back(0.4 + 0.3 * std::cos(v * M_PI / 3.0),
                     0.5 + 0.3 * std::sin(v * M_PI / 3.0));
  return pts;
}

}  // namespace

TEST_CASE("gauss lobatto small rules") {
  auto r2 = gauss_lobatto(2);
  CHECK(r2.nodes[0] == doctest::Approx(-1.0));
  CHECK(r2.nodes[1] == doctest::Approx(1.0));
  CHECK(r2.weights[0] == doctest::Approx(1.0));
  CHECK(r2.weights[1] == doctest::Approx(1.0));

  auto r3 = gauss_lobatto(3);
  CHECK(r3.nodes[1] == 0.0);
  CHECK(r3.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(r3.weights[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  // 5 nodes: exact through degree 2n-3 = 7
  auto r5 = gauss_lobatto(5);
  CHECK(edge_integrate_pow(r5, 6) == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("edge rule structure") {
  for (int n = 2; n <= 32; ++n) {
    auto gl = gauss_lobatto(n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(gl.weights[i] > 0.0);
      if (i > 0) CHECK(gl.nodes[i] > gl.nodes[i - 1]);
      CHECK(gl.nodes[i] == -gl.nodes[n - 1 - i]);
      wsum += gl.weights[i];
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(gl.nodes.front() == -1.0);
    CHECK(gl.nodes.back() == 1.0);
    // exactness limit 2n-3, and failure just beyond it for even powers
    int d = 2 * n - 3;
    int k = d % 2 == 0 ? d : d - 1;
    CHECK(edge_integrate_pow(gl, k) ==
          doctest::Approx(2.0 / (k + 1)).epsilon(1e-12));
  }
  for (int n = 1; n <= 20; ++n) {
    auto g = gauss_legendre(n);
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-13));
    int k = (2 * n - 1) % 2 == 0 ? 2 * n - 1 : 2 * n - 2;
    CHECK(edge_integrate_pow(g, k) ==
          doctest::Approx(2.0 / (k + 1)).epsilon(1e-12));
  }
}

TEST_CASE("polygon rule basic integrals") {
  auto square = polygon_rule(unit_square_poly(), 2);
  CHECK(square.integrate([](const Vec2& x) { return x.x() * x.x(); }) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(square.integrate([](const Vec2& x) { return x.x() * x.y(); }) ==
        doctest::Approx(0.25).epsilon(1e-13));

  std::vector<Vec2> tri = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  auto tr = polygon_rule(tri, 0);
  CHECK(tr.integrate([](const Vec2&) { return 1.0; }) ==
        doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("polygon rule matches green oracle on random degree-10 polynomial") {
  auto hex = regular_hexagon();
  auto rule = polygon_rule(hex, 10);
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<std::tuple<int, int, double>> terms;
  double exact = 0.0;
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; a + b <= 10; ++b) {
      double c = U(rng);
      terms.emplace_back(a, b, c);
      exact += c * moment_oracle(hex, a, b);
    }
  double approx = rule.integrate([&](const Vec2& x) {
    double s = 0.0;
    for (auto& [a, b, c] : terms)
      s += c * std::pow(x.x(), a) * std::pow(x.y(), b);
    return s;
  });
  CHECK(approx == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("moment oracle analytic values") {
  auto sq = unit_square_poly();
  CHECK(moment_oracle(sq, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment_oracle(sq, 3, 0) == doctest::Approx(0.25).epsilon(1e-14));

  // translation identity: int (x) over K+c = int x over K + c * |K|
  auto hex = regular_hexagon();
  double area = moment_oracle(hex, 0, 0);
  double mx = moment_oracle(hex, 1, 0);
  auto shifted = hex;
  for (auto& p : shifted) p += Vec2(0.3, -0.2);
  CHECK(moment_oracle(shifted, 1, 0) ==
        doctest::Approx(mx + 0.3 * area).epsilon(1e-13));
}

TEST_CASE("polygon rules reproduce moments on generated meshes") {
  // spot checks across the families; the exhaustive sweep runs in the
  // acceptance suite
  std::vector<PolygonMesh> meshes;
  meshes.push_back(generate_hex_mesh(3));
  meshes.push_back(generate_voronoi_lloyd(9, 20, 3));
  for (const auto& mesh : meshes) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto& loop = mesh.cells[c];
      std::vector<Vec2> pts(loop.size());
      for (std::size_t i = 0; i < loop.size(); ++i)
        pts[i] = mesh.vertices[loop[i]];
      auto rule = polygon_rule(pts, 12);
      for (int a = 0; a <= 6; ++a)
        for (int b = 0; a + b <= 6; ++b) {
          double ref = moment_oracle(pts, a, b);
          double got = rule.integrate([&](const Vec2& x) {
            return std::pow(x.x(), a) * std::pow(x.y(), b);
          });
          CHECK(std::abs(got - ref) <= 1e-11 * std::max(1.0, std::abs(ref)));
        }
    }
  }
}
