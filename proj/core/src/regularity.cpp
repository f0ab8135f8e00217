#include "polyvem/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace polyvem {

namespace {

double dist_point_segment(const Vec2& x, const Vec2& a, const Vec2& b) {
  Vec2 d = b - a;
  double t = d.squaredNorm() > 0 ? (x - a).dot(d) / d.squaredNorm() : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * d)).norm();
}

// x is in the kernel iff it lies on the inner side of every edge line
bool in_kernel(const std::vector<Vec2>& pts, const Vec2& x) {
  const int k = static_cast<int>(pts.size());
  for (int i = 0; i < k; ++i) {
    Vec2 e = pts[(i + 1) % k] - pts[i];
    if (e.x() * (x.y() - pts[i].y()) - e.y() * (x.x() - pts[i].x()) < 0.0)
      return false;
  }
  return true;
}

double boundary_distance(const std::vector<Vec2>& pts, const Vec2& x) {
  double d = std::numeric_limits<double>::max();
  const int k = static_cast<int>(pts.size());
  for (int i = 0; i < k; ++i)
    d = std::min(d, dist_point_segment(x, pts[i], pts[(i + 1) % k]));
  return d;
}

}  // namespace

RegularityReport check_cell_regularity(const PolygonMesh& mesh, int cell,
                                       double gamma_min,
                                       double gamma_tilde_min) {
  const auto& loop = mesh.cells[cell];
  const int k = static_cast<int>(loop.size());
  std::vector<Vec2> pts(k);
  for (int i = 0; i < k; ++i) pts[i] = mesh.vertices[loop[i]];

  CellGeometry g = mesh.cell_geometry(cell);
  RegularityReport rep;

  double min_vdist = std::numeric_limits<double>::max();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      min_vdist = std::min(min_vdist, (pts[j] - pts[i]).norm());
  rep.gamma_tilde = g.diameter > 0 ? min_vdist / g.diameter : 0.0;

  if (g.area <= 1e-14 * g.diameter * g.diameter) {
    rep.gamma = 0.0;
    rep.pass = false;
    return rep;
  }

  // coarse-to-fine grid search for the kernel point with the largest
  // inscribed ball; final resolution ~ diameter/1000
  Vec2 lo(g.x_min, g.y_min), hi(g.x_max, g.y_max);
  Vec2 best{0, 0};
  double best_r = -1.0;
  const int N = 48;
  for (int level = 0; level < 3; ++level) {
    Vec2 step = (hi - lo) / N;
    for (int iy = 0; iy <= N; ++iy)
      for (int ix = 0; ix <= N; ++ix) {
        Vec2 x = lo + Vec2(ix * step.x(), iy * step.y());
        if (!in_kernel(pts, x)) continue;
        double r = boundary_distance(pts, x);
        if (r > best_r) {
          best_r = r;
          best = x;
        }
      }
    if (best_r < 0.0) break;  // empty kernel at coarse level: not star-shaped
    Vec2 margin = 2.0 * step;
    lo = best - margin;
    hi = best + margin;
  }
  rep.gamma = best_r > 0.0 ? best_r / g.diameter : 0.0;
  rep.pass = rep.gamma >= gamma_min && rep.gamma_tilde >= gamma_tilde_min;
  return rep;
}

std::vector<RegularityReport> check_regularity(const PolygonMesh& mesh,
                                               double gamma_min,
                                               double gamma_tilde_min) {
  std::vector<RegularityReport> out;
  out.reserve(mesh.cell_count());
  for (int c = 0; c < mesh.cell_count(); ++c)
    out.push_back(check_cell_regularity(mesh, c, gamma_min, gamma_tilde_min));
  return out;
}

}  // namespace polyvem
