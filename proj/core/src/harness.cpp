#include "polyvem/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace polyvem {

TestCase make_test_case(const std::string& name) {
  TestCase tc;
  tc.name = name;
  if (name == "sinsin") {
    tc.exact = [](const Vec2& x) {
      return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
    };
    tc.exact_gradient = [](const Vec2& x) {
      return Vec2(M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
                  M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()));
    };
    tc.load = [](const Vec2& x) {
      return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
    };
    tc.homogeneous_bc = true;
    tc.regularity = "analytic";
  } else if (name == "corner25") {
    // harmonic, corner singularity at the origin; f == 0
    tc.exact = [](const Vec2& x) {
      double r = x.norm();
      double th = std::atan2(x.y(), x.x());
      return std::pow(r, 2.5) * std::sin(2.5 * th);
    };
    tc.exact_gradient = [](const Vec2& x) {
      double r = x.norm();
      if (r == 0.0) return Vec2(0, 0);
      double th = std::atan2(x.y(), x.x());
      double ur = 2.5 * std::pow(r, 1.5) * std::sin(2.5 * th);
      double ut = 2.5 * std::pow(r, 1.5) * std::cos(2.5 * th);
      Vec2 er(std::cos(th), std::sin(th)), et(-std::sin(th), std::cos(th));
      return Vec2(ur * er + ut * et);
    };
    tc.load = nullptr;
    tc.homogeneous_bc = false;
    tc.regularity = "sobolev";
  } else if (name == "patch") {
    tc.exact = [](const Vec2& x) { return x.squaredNorm(); };
    tc.exact_gradient = [](const Vec2& x) { return Vec2(2.0 * x); };
    tc.load = [](const Vec2&) { return -4.0; };
    tc.homogeneous_bc = false;
    tc.regularity = "polynomial";
  } else {
    throw std::invalid_argument("unknown test case: " + name);
  }
  return tc;
}

MeshFamily family_from_string(const std::string& s) {
  if (s == "tri" || s == "triangle") return MeshFamily::triangle;
  if (s == "square") return MeshFamily::square;
  if (s == "hex") return MeshFamily::hex;
  if (s == "voronoi") return MeshFamily::voronoi;
  throw std::invalid_argument("unknown mesh family: " + s);
}

std::string to_string(MeshFamily f) {
  switch (f) {
    case MeshFamily::triangle: return "tri";
    case MeshFamily::square: return "square";
    case MeshFamily::hex: return "hex";
    case MeshFamily::voronoi: return "voronoi";
  }
  return "?";
}

PolygonMesh make_family_mesh(MeshFamily family, int n, std::uint64_t seed,
                             int lloyd) {
  switch (family) {
    case MeshFamily::triangle: return generate_triangle_mesh(n, seed);
    case MeshFamily::square: return generate_square_mesh(n);
    case MeshFamily::hex: return generate_hex_mesh(n);
    case MeshFamily::voronoi:
      return generate_voronoi_lloyd(n * n, lloyd, seed);
  }
  throw std::invalid_argument("bad family");
}

double mesh_size(const PolygonMesh& mesh) {
  double h = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c)
    h = std::max(h, mesh.cell_geometry(c).diameter);
  return h;
}

ErrorPair error_norms(const PolygonMesh& mesh, const GlobalSystem& sys,
                      const Eigen::VectorXd& solution, const TestCase& tc) {
  ErrorPair err;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const LocalOperators& ops = sys.local_ops[c];
    const auto& gd = sys.dof_map.cell_dofs[c];
    Eigen::VectorXd loc(gd.size());
    for (std::size_t i = 0; i < gd.size(); ++i) loc(i) = solution(gd[i]);
    // the projector rows carry heavy cancellation; apply them at extended
    // precision before dropping back to double coefficients
    Eigen::VectorXd coeff =
        (ops.Pi_ext * loc.cast<long double>()).cast<double>();

    PolygonRule rule = polygon_rule(mesh, c, 2 * ops.layout.p + 4);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2& x = rule.points[q];
      double v = 0.0;
      Vec2 g{0, 0};
      for (int b = 0; b < ops.basis->size(); ++b) {
        v += coeff(b) * ops.basis->value(b, x);
        g += coeff(b) * ops.basis->gradient(b, x);
      }
      double dv = tc.exact(x) - v;
      Vec2 dg = tc.exact_gradient(x) - g;
      err.l2 += rule.weights[q] * dv * dv;
      err.h1_broken += rule.weights[q] * dg.squaredNorm();
    }
  }
  err.l2 = std::sqrt(err.l2);
  err.h1_broken = std::sqrt(err.h1_broken);
  return err;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

StudyRow evaluate_system(const TestCase& tc, const PolygonMesh& mesh,
                         const GlobalSystem& sys,
                         const std::string& family_name, int n, int p,
                         const SolveOptions& opts) {
  Eigen::VectorXd sol = solve(sys);
  ErrorPair err = error_norms(mesh, sys, sol, tc);

  StudyRow row;
  row.case_name = tc.name;
  row.family = family_name;
  row.n = n;
  row.p = p;
  row.basis = to_string(opts.basis);
  row.gs = opts.use_gs;
  row.h = mesh_size(mesh);
  row.ndof = sys.dof_map.total;
  row.err_h1 = err.h1_broken;
  row.err_l2 = err.l2;
  if (opts.with_cond) row.cond = condition_number(sys);
  row.residual = sys.solve_residual;
  return row;
}

GlobalSystem assemble_for(const TestCase& tc, const PolygonMesh& mesh, int p,
                          const SolveOptions& opts) {
  return assemble(mesh, p, opts.basis, tc.load,
                  tc.homogeneous_bc ? ScalarField(nullptr) : tc.exact,
                  opts.use_gs);
}

// algebraic floor estimate: the patch case through the same operators
double patch_floor(const TestCase& tc, const PolygonMesh& mesh,
                   const GlobalSystem& base, const std::string& family_name,
                   int n, int p, const SolveOptions& opts) {
  if (p < 2) return 1e-14;
  TestCase patch = make_test_case("patch");
  GlobalSystem sys = reassemble(base, mesh, patch.load, patch.exact);
  SolveOptions po = opts;
  po.with_cond = false;
  StudyRow row = evaluate_system(patch, mesh, sys, family_name, n, p, po);
  return std::max(row.err_h1, 1e-15);
}

}  // namespace

StudyRow run_single(const TestCase& tc, const PolygonMesh& mesh,
                    const std::string& family_name, int n, int p,
                    const SolveOptions& opts) {
  GlobalSystem sys = assemble_for(tc, mesh, p, opts);
  return evaluate_system(tc, mesh, sys, family_name, n, p, opts);
}

StudyRow run_single(const TestCase& tc, MeshFamily family, int n, int p,
                    const SolveOptions& opts) {
  PolygonMesh mesh = make_family_mesh(family, n, opts.seed, opts.lloyd);
  return run_single(tc, mesh, to_string(family), n, p, opts);
}

StudyReport h_study(const TestCase& tc, MeshFamily family, int p,
                    const std::vector<int>& n_list, const SolveOptions& opts) {
  StudyReport rep;
  std::vector<double> lh, le1, le2;
  for (int n : n_list) {
    PolygonMesh mesh = make_family_mesh(family, n, opts.seed, opts.lloyd);
    GlobalSystem sys = assemble_for(tc, mesh, p, opts);
    StudyRow row = evaluate_system(tc, mesh, sys, to_string(family), n, p, opts);
    double floor = patch_floor(tc, mesh, sys, to_string(family), n, p, opts);
    row.at_floor = row.err_h1 < 100.0 * floor;
    rep.rows.push_back(row);
    if (!row.at_floor) {
      lh.push_back(std::log(row.h));
      le1.push_back(std::log(row.err_h1));
      le2.push_back(std::log(row.err_l2));
    }
  }
  if (lh.size() >= 3) {
    rep.slope_h1 = fit_slope(lh, le1);
    rep.slope_l2 = fit_slope(lh, le2);
  }
  return rep;
}

StudyReport p_study(const TestCase& tc, MeshFamily family, int n,
                    const std::vector<int>& p_list, const SolveOptions& opts) {
  PolygonMesh mesh = make_family_mesh(family, n, opts.seed, opts.lloyd);
  return p_study(tc, mesh, to_string(family), n, p_list, opts);
}

StudyReport p_study(const TestCase& tc, const PolygonMesh& mesh,
                    const std::string& family_name, int n,
                    const std::vector<int>& p_list, const SolveOptions& opts) {
  StudyReport rep;
  std::vector<double> lp, le1, le2;
  for (int p : p_list) {
    GlobalSystem sys = assemble_for(tc, mesh, p, opts);
    StudyRow row = evaluate_system(tc, mesh, sys, family_name, n, p, opts);
    double floor = patch_floor(tc, mesh, sys, family_name, n, p, opts);
    row.at_floor = row.err_h1 < 100.0 * floor;
    rep.rows.push_back(row);
    if (!row.at_floor && p >= 3) {
      lp.push_back(std::log(static_cast<double>(p)));
      le1.push_back(std::log(row.err_h1));
      le2.push_back(std::log(row.err_l2));
    }
  }
  if (lp.size() >= 3) {
    rep.slope_h1 = fit_slope(lp, le1);
    rep.slope_l2 = fit_slope(lp, le2);
  }
  return rep;
}

StudyReport basis_comparison(const TestCase& tc,
                             const std::vector<MeshFamily>& families, int n,
                             const std::vector<int>& p_list,
                             const SolveOptions& opts) {
  StudyReport rep;
  for (MeshFamily fam : families) {
    PolygonMesh mesh = make_family_mesh(fam, n, opts.seed, opts.lloyd);
    for (int p : p_list)
      for (BasisKind kind : {BasisKind::monomial_q1, BasisKind::l2scaled_q2,
                             BasisKind::legendre_q3}) {
        SolveOptions o = opts;
        o.basis = kind;
        o.with_cond = true;
        rep.rows.push_back(run_single(tc, mesh, to_string(fam), n, p, o));
      }
  }
  return rep;
}

StudyReport gs_comparison(const TestCase& tc,
                          const std::vector<MeshFamily>& families, int n,
                          const std::vector<int>& p_list,
                          const SolveOptions& opts) {
  StudyReport rep;
  for (MeshFamily fam : families) {
    PolygonMesh mesh = make_family_mesh(fam, n, opts.seed, opts.lloyd);
    for (int p : p_list) {
      SolveOptions o = opts;
      o.with_cond = true;
      o.basis = BasisKind::l2scaled_q2;
      o.use_gs = false;
      rep.rows.push_back(run_single(tc, mesh, to_string(fam), n, p, o));
      o.basis = BasisKind::monomial_q1;
      o.use_gs = true;
      rep.rows.push_back(run_single(tc, mesh, to_string(fam), n, p, o));
    }
  }
  return rep;
}

void StudyReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "case,family,n,p,basis,gs,h,ndof,err_h1_broken,err_l2,cond,residual,"
         "slope_h1,slope_l2\n";
  out << std::setprecision(12);
  for (const StudyRow& r : rows) {
    out << r.case_name << ',' << r.family << ',' << r.n << ',' << r.p << ','
        << r.basis << ',' << (r.gs ? 1 : 0) << ',' << r.h << ',' << r.ndof
        << ',' << r.err_h1 << ',' << r.err_l2 << ',' << r.cond << ','
        << r.residual << ',';
    if (slope_h1) out << *slope_h1;
    out << ',';
    if (slope_l2) out << *slope_l2;
    out << '\n';
  }
}

void StudyReport::write_gnuplot(const std::string& path,
                                const std::string& csv_path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "set datafile separator ','\n"
      << "set logscale y\n"
      << "set key outside\n"
      << "set xlabel 'p (or log h)'\n"
      << "set ylabel 'error'\n"
      << "plot '" << csv_path
      << "' every ::1 using 4:9 with linespoints title 'H1', \\\n"
      << "     '" << csv_path
      << "' every ::1 using 4:10 with linespoints title 'L2'\n";
}

}  // namespace polyvem
