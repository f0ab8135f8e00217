#include <benchmark/benchmark.h>

#include "polyvem/harness.hpp"

using namespace polyvem;

static void BM_LocalOperators(benchmark::State& state) {
  int p = static_cast<int>(state.range(0));
  PolygonMesh mesh = generate_voronoi_lloyd(16, 50, 7);
  for (auto _ : state) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto ops = build_local_operators(mesh, c, p, BasisKind::l2scaled_q2);
      benchmark::DoNotOptimize(ops.A_hat);
    }
  }
  state.SetItemsProcessed(state.iterations() * mesh.cell_count());
}
BENCHMARK(BM_LocalOperators)->DenseRange(1, 6);

static void BM_AssembleSolve(benchmark::State& state) {
  int p = static_cast<int>(state.range(0));
  PolygonMesh mesh = generate_hex_mesh(8);
  TestCase tc = make_test_case("sinsin");
  for (auto _ : state) {
    auto sys = assemble(mesh, p, BasisKind::l2scaled_q2, tc.load, nullptr);
    Eigen::VectorXd sol = solve(sys);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_AssembleSolve)->DenseRange(1, 4);

static void BM_PolygonRule(benchmark::State& state) {
  PolygonMesh mesh = generate_voronoi_lloyd(25, 50, 3);
  int degree = static_cast<int>(state.range(0));
  for (auto _ : state) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto rule = polygon_rule(mesh, c, degree);
      benchmark::DoNotOptimize(rule.points);
    }
  }
}
BENCHMARK(BM_PolygonRule)->Arg(4)->Arg(10)->Arg(20);

BENCHMARK_MAIN();
