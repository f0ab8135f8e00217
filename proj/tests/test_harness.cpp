#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "polyvem/harness.hpp"

using namespace polyvem;

TEST_CASE("test cases satisfy their PDE") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  const double h = 1e-5;
  for (const char* name : {"sinsin", "patch"}) {
    TestCase tc = make_test_case(name);
    for (int s = 0; s < 100; ++s) {
      Vec2 x(U(rng), U(rng));
      double lap = (tc.exact(x + Vec2(h, 0)) + tc.exact(x - Vec2(h, 0)) +
                    tc.exact(x + Vec2(0, h)) + tc.exact(x - Vec2(0, h)) -
                    4.0 * tc.exact(x)) /
                   (h * h);
      CHECK(std::abs(-lap - tc.load(x)) < 1e-4);
    }
  }
  // corner25 is harmonic with f == 0
  TestCase tc = make_test_case("corner25");
  CHECK(tc.load == nullptr);
  for (int s = 0; s < 100; ++s) {
    Vec2 x(U(rng), U(rng));
    double lap = (tc.exact(x + Vec2(h, 0)) + tc.exact(x - Vec2(h, 0)) +
                  tc.exact(x + Vec2(0, h)) + tc.exact(x - Vec2(0, h)) -
                  4.0 * tc.exact(x)) /
                 (h * h);
    CHECK(std::abs(lap) < 1e-4);
  }
}

TEST_CASE("error norms vanish for an exactly representable solution") {
  TestCase patch = make_test_case("patch");
  auto m = generate_hex_mesh(4);
  SolveOptions opts;
  StudyRow row = run_single(patch, m, "hex", 4, 3, opts);
  CHECK(row.err_h1 <= 1e-10);
  CHECK(row.err_l2 <= 1e-10);
}

TEST_CASE("error magnitude sanity against a P1 reference") {
  // crude oracle: piecewise-linear interpolation error on the same mesh
  // bounds the p=2 VEM error from above by a wide margin
  TestCase tc = make_test_case("sinsin");
  SolveOptions opts;
  StudyRow row = run_single(tc, MeshFamily::square, 8, 2, opts);
  // |u - I_h u|_1 ~ C h |u|_2 with h = sqrt(2)/8, |u|_2 = pi^2
  double upper = std::sqrt(2.0) / 8.0 * M_PI * M_PI;
  CHECK(row.err_h1 < upper);
  CHECK(row.err_h1 > upper / 1000.0);  // not absurdly small either
}

TEST_CASE("h study recovers the expected rates") {
  TestCase tc = make_test_case("sinsin");
  SolveOptions opts;
  // p=2: the load keeps only the constant moment, which caps the L2 rate
  // at h^2; from p=3 on the moment projection is rich enough for p+1
  StudyReport rep2 = h_study(tc, MeshFamily::square, 2, {4, 8, 16}, opts);
  REQUIRE(rep2.slope_h1.has_value());
  CHECK(*rep2.slope_h1 == doctest::Approx(2.0).epsilon(0.15));
  CHECK(*rep2.slope_l2 == doctest::Approx(2.0).epsilon(0.15));
  StudyReport rep3 = h_study(tc, MeshFamily::square, 3, {4, 8, 16}, opts);
  REQUIRE(rep3.slope_h1.has_value());
  CHECK(*rep3.slope_h1 == doctest::Approx(3.0).epsilon(0.15));
  CHECK(*rep3.slope_l2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("p study on sinsin decreases monotonically") {
  TestCase tc = make_test_case("sinsin");
  SolveOptions opts;
  // the raw monomial basis is unusable past p ~ 6; that regime belongs to
  // the basis comparison, not to the p-convergence check
  opts.basis = BasisKind::l2scaled_q2;
  StudyReport rep =
      p_study(tc, MeshFamily::square, 4, {1, 2, 3, 4, 5, 6, 7}, opts);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].at_floor) break;
    CHECK(rep.rows[i].err_h1 <= rep.rows[i - 1].err_h1);
  }
  CHECK(rep.rows.back().err_h1 < 1e-6);
}

TEST_CASE("patch case flags every row as floor") {
  TestCase patch = make_test_case("patch");
  SolveOptions opts;
  StudyReport rep = p_study(patch, MeshFamily::square, 4, {2, 3, 4}, opts);
  for (const auto& r : rep.rows) CHECK(r.at_floor);
  CHECK_FALSE(rep.slope_h1.has_value());
}

TEST_CASE("study rows are reproducible") {
  TestCase tc = make_test_case("sinsin");
  SolveOptions opts;
  StudyRow a = run_single(tc, MeshFamily::voronoi, 3, 2, opts);
  StudyRow b = run_single(tc, MeshFamily::voronoi, 3, 2, opts);
  CHECK(a.err_h1 == b.err_h1);
  CHECK(a.err_l2 == b.err_l2);
}

TEST_CASE("csv output schema") {
  TestCase tc = make_test_case("sinsin");
  SolveOptions opts;
  StudyReport rep = h_study(tc, MeshFamily::square, 2, {2, 4, 8}, opts);
  const char* path = "harness_report.csv";
  rep.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "case,family,n,p,basis,gs,h,ndof,err_h1_broken,err_l2,cond,residual,"
        "slope_h1,slope_l2");
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 3);
  std::remove(path);
}

TEST_CASE("slope fitting") {
  std::vector<double> x = {0, 1, 2, 3};
  std::vector<double> y = {1, 3, 5, 7};
  CHECK(fit_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}
