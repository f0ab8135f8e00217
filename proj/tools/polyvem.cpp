// polyvem CLI: mesh generation, single solves and convergence /
// conditioning studies on polygonal meshes of the unit square.

#include <iostream>

#include <CLI11.hpp>

#include "polyvem/harness.hpp"

using namespace polyvem;

namespace {

// "--mesh" accepts either a polymesh file path or an inline family spec
// "family:n[:seed]"
PolygonMesh resolve_mesh(const std::string& spec, int lloyd, std::string& family,
                         int& n) {
  auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    family = "file";
    n = 0;
    return load_mesh(spec);
  }
  family = spec.substr(0, c1);
  std::string rest = spec.substr(c1 + 1);
  std::uint64_t seed = 7;
  auto c2 = rest.find(':');
  if (c2 != std::string::npos) {
    seed = std::stoull(rest.substr(c2 + 1));
    rest = rest.substr(0, c2);
  }
  n = std::stoi(rest);
  return make_family_mesh(family_from_string(family), n, seed, lloyd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hp virtual element solver for the Poisson problem on "
               "polygonal meshes"};
  app.require_subcommand(1);

  // --- mesh ---
  auto* mesh_cmd = app.add_subcommand("mesh", "generate a mesh file");
  std::string family = "square", out_path = "mesh.txt";
  int n = 8, lloyd = 100;
  std::uint64_t seed = 7;
  mesh_cmd->add_option("--family", family, "tri|square|hex|voronoi");
  mesh_cmd->add_option("--n", n, "cells per side (seeds^1/2 for voronoi)");
  mesh_cmd->add_option("--seed", seed, "RNG seed");
  mesh_cmd->add_option("--lloyd", lloyd, "Lloyd iterations (voronoi)");
  mesh_cmd->add_option("-o,--output", out_path, "output path")->required();

  // --- solve ---
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem instance");
  std::string mesh_spec, case_name = "sinsin", basis = "q1",
              solve_out = "solve.csv";
  int p = 2;
  bool use_gs = false, with_cond = false;
  solve_cmd->add_option("--mesh", mesh_spec, "mesh file or family:n[:seed]")
      ->required();
  solve_cmd->add_option("--p", p, "polynomial degree");
  solve_cmd->add_option("--basis", basis, "q1|q2|q3");
  solve_cmd->add_flag("--gram-schmidt", use_gs, "orthonormalize internal dofs");
  solve_cmd->add_flag("--cond", with_cond, "report the condition number");
  solve_cmd->add_option("--case", case_name, "sinsin|corner25|patch");
  solve_cmd->add_option("--lloyd", lloyd, "Lloyd iterations (voronoi specs)");
  solve_cmd->add_option("-o,--output", solve_out, "output CSV");

  // --- study ---
  auto* study_cmd = app.add_subcommand("study", "run a convergence or "
                                                "conditioning study");
  std::string kind = "p", gnuplot_path;
  std::vector<std::string> families = {"square"};
  std::vector<int> p_list = {1, 2, 3, 4, 5};
  std::vector<int> n_list = {8};
  std::string study_out = "report.csv";
  study_cmd->add_option("--kind", kind, "h|p|basis|gs");
  study_cmd->add_option("--case", case_name, "sinsin|corner25|patch");
  study_cmd->add_option("--family", families, "mesh families");
  study_cmd->add_option("--p", p_list, "degree list");
  study_cmd->add_option("--n", n_list, "mesh size list");
  study_cmd->add_option("--basis", basis, "q1|q2|q3");
  study_cmd->add_flag("--gram-schmidt", use_gs, "orthonormalize internal dofs");
  study_cmd->add_option("--seed", seed, "RNG seed");
  study_cmd->add_option("--lloyd", lloyd, "Lloyd iterations (voronoi)");
  study_cmd->add_option("-o,--output", study_out, "output CSV");
  study_cmd->add_option("--gnuplot", gnuplot_path, "emit a gnuplot script");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mesh_cmd) {
      PolygonMesh mesh = make_family_mesh(family_from_string(family), n, seed,
                                          lloyd);
      save_mesh(mesh, out_path);
      std::cout << "wrote " << out_path << " (" << mesh.cell_count()
                << " cells, " << mesh.vertex_count() << " vertices)\n";
    } else if (*solve_cmd) {
      std::string fam;
      int fam_n = 0;
      PolygonMesh mesh = resolve_mesh(mesh_spec, lloyd, fam, fam_n);
      TestCase tc = make_test_case(case_name);
      SolveOptions opts;
      opts.basis = basis_kind_from_string(basis);
      opts.use_gs = use_gs;
      opts.with_cond = with_cond;
      opts.seed = seed;
      opts.lloyd = lloyd;
      StudyReport rep;
      rep.rows.push_back(run_single(tc, mesh, fam, fam_n, p, opts));
      rep.write_csv(solve_out);
      const StudyRow& r = rep.rows.back();
      std::cout << "h=" << r.h << " ndof=" << r.ndof << " err_h1=" << r.err_h1
                << " err_l2=" << r.err_l2;
      if (with_cond) std::cout << " cond=" << r.cond;
      std::cout << "\n";
    } else if (*study_cmd) {
      TestCase tc = make_test_case(case_name);
      SolveOptions opts;
      opts.basis = basis_kind_from_string(basis);
      opts.use_gs = use_gs;
      opts.seed = seed;
      opts.lloyd = lloyd;
      StudyReport all;
      std::vector<MeshFamily> fams;
      for (const auto& f : families) fams.push_back(family_from_string(f));
      if (kind == "h") {
        for (MeshFamily fam : fams) {
          StudyReport rep = h_study(tc, fam, p_list.front(), n_list, opts);
          all.rows.insert(all.rows.end(), rep.rows.begin(), rep.rows.end());
          all.slope_h1 = rep.slope_h1;
          all.slope_l2 = rep.slope_l2;
          if (rep.slope_h1)
            std::cout << to_string(fam) << ": slope_h1=" << *rep.slope_h1
                      << " slope_l2=" << *rep.slope_l2 << "\n";
        }
      } else if (kind == "p") {
        for (MeshFamily fam : fams) {
          StudyReport rep = p_study(tc, fam, n_list.front(), p_list, opts);
          all.rows.insert(all.rows.end(), rep.rows.begin(), rep.rows.end());
          all.slope_h1 = rep.slope_h1;
          all.slope_l2 = rep.slope_l2;
        }
      } else if (kind == "basis") {
        all = basis_comparison(tc, fams, n_list.front(), p_list, opts);
      } else if (kind == "gs") {
        all = gs_comparison(tc, fams, n_list.front(), p_list, opts);
      } else {
        std::cerr << "unknown study kind: " << kind << "\n";
        return 1;
      }
      all.write_csv(study_out);
      if (!gnuplot_path.empty()) all.write_gnuplot(gnuplot_path, study_out);
      std::cout << "wrote " << study_out << " (" << all.rows.size()
                << " rows)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "polyvem: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
