#include "polyvem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

namespace polyvem {

namespace {

inline std::uint64_t pack_edge(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// segment intersection test, proper crossings only
bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    double v = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    return (v > 0) - (v < 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

// deterministic uniform in [0,1) from a raw 64-bit draw
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double polygon_area(const std::vector<Vec2>& pts) {
  double s = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

Vec2 polygon_centroid(const std::vector<Vec2>& pts) {
  double a = 0.0;
  Vec2 c{0, 0};
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    double w = p.x() * q.y() - q.x() * p.y();
    a += w;
    c += w * (p + q);
  }
  a *= 0.5;
  return c / (6.0 * a);
}

void PolygonMesh::finalize() {
  edges.clear();
  edge_lookup_.clear();
  boundary_vertex.assign(vertices.size(), false);

  std::unordered_map<std::uint64_t, int> edge_map;
  for (int c = 0; c < cell_count(); ++c) {
    const auto& loop = cells[c];
    const int k = static_cast<int>(loop.size());
    if (k < 3) throw MeshError("cell with fewer than 3 vertices");
    for (int i = 0; i < k; ++i) {
      if (loop[i] < 0 || loop[i] >= vertex_count())
        throw MeshError("cell references vertex index out of range");
      for (int j = i + 1; j < k; ++j)
        if (loop[i] == loop[j]) throw MeshError("repeated vertex in cell");
    }
    std::vector<Vec2> pts(k);
    for (int i = 0; i < k; ++i) pts[i] = vertices[loop[i]];
    if (polygon_area(pts) <= 0.0) throw MeshError("cell not CCW or degenerate");
    // simplicity: no two non-adjacent edges cross
    for (int i = 0; i < k; ++i)
      for (int j = i + 2; j < k; ++j) {
        if (i == 0 && j == k - 1) continue;
        if (segments_cross(pts[i], pts[(i + 1) % k], pts[j], pts[(j + 1) % k]))
          throw MeshError("self-intersecting cell");
      }

    for (int i = 0; i < k; ++i) {
      int a = loop[i], b = loop[(i + 1) % k];
      std::uint64_t key = pack_edge(a, b);
      auto it = edge_map.find(key);
      if (it == edge_map.end()) {
        MeshEdge e;
        e.v0 = std::min(a, b);
        e.v1 = std::max(a, b);
        e.cell_a = c;
        edge_map.emplace(key, static_cast<int>(edges.size()));
        edges.push_back(e);
      } else {
        MeshEdge& e = edges[it->second];
        if (e.cell_b >= 0) throw MeshError("edge shared by more than 2 cells");
        e.cell_b = c;
      }
    }
  }

  for (const MeshEdge& e : edges)
    if (e.boundary()) {
      boundary_vertex[e.v0] = true;
      boundary_vertex[e.v1] = true;
    }

  edge_lookup_.reserve(edge_map.size());
  for (const auto& [key, idx] : edge_map) edge_lookup_.emplace_back(key, idx);
  std::sort(edge_lookup_.begin(), edge_lookup_.end());
}

int PolygonMesh::edge_index(int a, int b) const {
  std::uint64_t key = pack_edge(a, b);
  auto it = std::lower_bound(edge_lookup_.begin(), edge_lookup_.end(),
                             std::make_pair(key, -1));
  if (it == edge_lookup_.end() || it->first != key)
    throw MeshError("edge not found");
  return it->second;
}

CellGeometry PolygonMesh::cell_geometry(int cell) const {
  const auto& loop = cells[cell];
  const int k = static_cast<int>(loop.size());
  std::vector<Vec2> pts(k);
  for (int i = 0; i < k; ++i) pts[i] = vertices[loop[i]];

  CellGeometry g;
  g.vertex_count = k;
  g.area = polygon_area(pts);
  g.barycenter = polygon_centroid(pts);
  g.x_min = g.x_max = pts[0].x();
  g.y_min = g.y_max = pts[0].y();
  for (const Vec2& p : pts) {
    g.x_min = std::min(g.x_min, p.x());
    g.x_max = std::max(g.x_max, p.x());
    g.y_min = std::min(g.y_min, p.y());
    g.y_max = std::max(g.y_max, p.y());
  }
  for (int i = 0; i < k; ++i) {
    g.perimeter += (pts[(i + 1) % k] - pts[i]).norm();
    for (int j = i + 1; j < k; ++j)
      g.diameter = std::max(g.diameter, (pts[j] - pts[i]).norm());
  }
  return g;
}

double PolygonMesh::total_area() const {
  double s = 0.0;
  for (int c = 0; c < cell_count(); ++c) s += cell_geometry(c).area;
  return s;
}

PolygonMesh mesh_from_polygons(const std::vector<std::vector<Vec2>>& polys,
                               double merge_tol) {
  PolygonMesh mesh;
  // hash grid keyed on quantized coordinates; probe the 3x3 neighborhood so
  // points straddling a grid line still merge
  const double cell = 4.0 * merge_tol;
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  auto cell_key = [&](long long ix, long long iy) {
    return (static_cast<std::uint64_t>(ix + (1LL << 30)) << 32) ^
           static_cast<std::uint64_t>(iy + (1LL << 30));
  };
  auto find_or_add = [&](const Vec2& p) {
    long long ix = static_cast<long long>(std::floor(p.x() / cell));
    long long iy = static_cast<long long>(std::floor(p.y() / cell));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(cell_key(ix + dx, iy + dy));
        if (it == grid.end()) continue;
        for (int idx : it->second)
          if ((mesh.vertices[idx] - p).norm() <= merge_tol) return idx;
      }
    int idx = mesh.vertex_count();
    mesh.vertices.push_back(p);
    grid[cell_key(ix, iy)].push_back(idx);
    return idx;
  };

  for (const auto& poly : polys) {
    std::vector<int> loop;
    for (const Vec2& p : poly) {
      int idx = find_or_add(p);
      if (loop.empty() || loop.back() != idx) loop.push_back(idx);
    }
    while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
    if (loop.size() < 3) continue;
    mesh.cells.push_back(std::move(loop));
  }
  mesh.finalize();
  return mesh;
}

PolygonMesh generate_square_mesh(int n) {
  if (n < 1) throw MeshError("square mesh requires n >= 1");
  PolygonMesh mesh;
  const double h = 1.0 / n;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.emplace_back(i * h, j * h);
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      mesh.cells.push_back(
          {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  mesh.finalize();
  return mesh;
}

PolygonMesh generate_triangle_mesh(int n, std::uint64_t seed, double jitter) {
  if (n < 2) throw MeshError("triangle mesh requires n >= 2");
  const double h = 1.0 / n;
  for (int attempt = 0; attempt < 10; ++attempt) {
    double amp = jitter * h * std::pow(0.5, attempt);
    std::mt19937_64 rng(seed);
    PolygonMesh mesh;
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        Vec2 p(i * h, j * h);
        if (i > 0 && i < n && j > 0 && j < n) {
          p.x() += amp * (2.0 * uniform01(rng) - 1.0);
          p.y() += amp * (2.0 * uniform01(rng) - 1.0);
        }
        mesh.vertices.push_back(p);
      }
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    bool ok = true;
    for (int j = 0; j < n && ok; ++j)
      for (int i = 0; i < n && ok; ++i) {
        int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1),
            d = vid(i, j + 1);
        bool diag_ac = (rng() & 1u) != 0;
        std::vector<std::vector<int>> tris;
        if (diag_ac)
          tris = {{a, b, c}, {a, c, d}};
        else
          tris = {{a, b, d}, {b, c, d}};
        for (auto& t : tris) {
          std::vector<Vec2> pts = {mesh.vertices[t[0]], mesh.vertices[t[1]],
                                   mesh.vertices[t[2]]};
          if (polygon_area(pts) <= 1e-10) {
            ok = false;
            break;
          }
          mesh.cells.push_back(t);
        }
      }
    if (!ok) continue;
    mesh.finalize();
    return mesh;
  }
  throw MeshError("triangle mesh degenerated after 10 jitter reductions");
}

namespace {

// Sutherland-Hodgman clip of a CCW polygon against the half-plane
// n.dot(x) <= d.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& n,
                                  double d) {
  std::vector<Vec2> out;
  const int k = static_cast<int>(poly.size());
  for (int i = 0; i < k; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % k];
    double fp = n.dot(p) - d, fq = n.dot(q) - d;
    if (fp <= 0.0) out.push_back(p);
    if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
      double t = fp / (fp - fq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

std::vector<Vec2> clip_to_unit_square(std::vector<Vec2> poly) {
  poly = clip_half_plane(poly, Vec2(-1, 0), 0.0);
  poly = clip_half_plane(poly, Vec2(1, 0), 1.0);
  poly = clip_half_plane(poly, Vec2(0, -1), 0.0);
  poly = clip_half_plane(poly, Vec2(0, 1), 1.0);
  return poly;
}

double g_last_lloyd_displacement = 0.0;

}  // namespace

PolygonMesh generate_hex_mesh(int n) {
  if (n < 2) throw MeshError("hex mesh requires n >= 2");
  // pointy-top hexagons: width sqrt(3) R, row pitch 1.5 R
  const double R = 1.0 / (1.5 * n);
  const double w = std::sqrt(3.0) * R;
  std::vector<std::vector<Vec2>> polys;
  int rows = n + 2, cols = static_cast<int>(std::ceil(1.0 / w)) + 2;
  for (int row = -1; row <= rows; ++row) {
    double cy = 0.25 * R + 1.5 * R * row;
    double x0 = (row % 2 == 0) ? 0.0 : 0.5 * w;
    for (int col = -1; col <= cols; ++col) {
      double cx = x0 + w * col;
      std::vector<Vec2> hex;
      for (int v = 0; v < 6; ++v) {
        double ang = M_PI / 6.0 + v * M_PI / 3.0;
        hex.emplace_back(cx + R * std::cos(ang), cy + R * std::sin(ang));
      }
      auto clipped = clip_to_unit_square(hex);
      if (clipped.size() >= 3 && polygon_area(clipped) > 1e-12)
        polys.push_back(clipped);
    }
  }
  return mesh_from_polygons(polys);
}

double last_lloyd_displacement() { return g_last_lloyd_displacement; }

PolygonMesh generate_voronoi_lloyd(int n_seeds, int iterations,
                                   std::uint64_t seed) {
  if (n_seeds < 1) throw MeshError("voronoi mesh requires n_seeds >= 1");
  if (iterations < 0) throw MeshError("iterations must be >= 0");

  std::mt19937_64 rng(seed);
  std::vector<Vec2> seeds(n_seeds);
  for (auto& s : seeds) s = Vec2(uniform01(rng), uniform01(rng));

  // duplicate guard: perturb once and recheck
  for (int pass = 0; pass < 2; ++pass) {
    bool dup = false;
    for (int i = 0; i < n_seeds && !dup; ++i)
      for (int j = i + 1; j < n_seeds; ++j)
        if ((seeds[i] - seeds[j]).norm() < 1e-12) {
          dup = true;
          break;
        }
    if (!dup) break;
    if (pass == 1) throw MeshError("duplicate voronoi seeds persist");
    for (auto& s : seeds)
      s += Vec2(1e-9 * (2.0 * uniform01(rng) - 1.0),
                1e-9 * (2.0 * uniform01(rng) - 1.0));
  }

  auto voronoi_cells = [&]() {
    std::vector<std::vector<Vec2>> cells(n_seeds);
    for (int i = 0; i < n_seeds; ++i) {
      std::vector<Vec2> poly = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
      for (int j = 0; j < n_seeds && poly.size() >= 3; ++j) {
        if (j == i) continue;
        // bisector half-plane closer to seed i
        Vec2 nrm = seeds[j] - seeds[i];
        double d = 0.5 * (seeds[j].squaredNorm() - seeds[i].squaredNorm());
        poly = clip_half_plane(poly, nrm, d);
      }
      cells[i] = poly;
    }
    return cells;
  };

  g_last_lloyd_displacement = 0.0;
  for (int it = 0; it < iterations; ++it) {
    auto cells = voronoi_cells();
    double maxdisp = 0.0;
    for (int i = 0; i < n_seeds; ++i) {
      if (cells[i].size() < 3) continue;
      Vec2 c = polygon_centroid(cells[i]);
      maxdisp = std::max(maxdisp, (c - seeds[i]).norm());
      seeds[i] = c;
    }
    g_last_lloyd_displacement = maxdisp;
  }

  auto cells = voronoi_cells();
  std::vector<std::vector<Vec2>> polys;
  for (auto& c : cells)
    if (c.size() >= 3 && polygon_area(c) > 1e-12) polys.push_back(c);

  // Lloyd relaxation drives the diagram toward a lattice-like configuration
  // whose vertices approach fourfold degeneracy, leaving edges far shorter
  // than the cell size. Weld vertex clusters so the minimum edge length
  // stays proportional to the cell diameter; representatives are pinned to
  // the square boundary so the tiling of the unit square is preserved.
  const double weld = 0.05 / std::sqrt(static_cast<double>(n_seeds));
  struct Cluster {
    Vec2 pos;
    bool x0 = false, x1 = false, y0 = false, y1 = false;
  };
  std::vector<Cluster> clusters;
  auto classify = [&](Cluster& cl, const Vec2& p) {
    const double eps = 1e-9;
    if (p.x() <= eps) cl.x0 = true;
    if (p.x() >= 1.0 - eps) cl.x1 = true;
    if (p.y() <= eps) cl.y0 = true;
    if (p.y() >= 1.0 - eps) cl.y1 = true;
  };
  auto cluster_of = [&](const Vec2& p) {
    for (std::size_t k = 0; k < clusters.size(); ++k)
      if ((clusters[k].pos - p).norm() <= weld) return static_cast<int>(k);
    clusters.push_back({p});
    return static_cast<int>(clusters.size()) - 1;
  };
  std::vector<std::vector<int>> poly_clusters(polys.size());
  for (std::size_t i = 0; i < polys.size(); ++i)
    for (const Vec2& p : polys[i]) {
      int k = cluster_of(p);
      classify(clusters[k], p);
      poly_clusters[i].push_back(k);
    }
  for (Cluster& cl : clusters) {
    if (cl.x0) cl.pos.x() = 0.0;
    if (cl.x1) cl.pos.x() = 1.0;
    if (cl.y0) cl.pos.y() = 0.0;
    if (cl.y1) cl.pos.y() = 1.0;
  }
  std::vector<std::vector<Vec2>> welded;
  for (const auto& loop : poly_clusters) {
    std::vector<int> ids;
    for (int k : loop)
      if (ids.empty() || ids.back() != k) ids.push_back(k);
    while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
    if (ids.size() < 3) continue;
    std::vector<Vec2> poly;
    for (int k : ids) poly.push_back(clusters[k].pos);
    if (polygon_area(poly) > 1e-12) welded.push_back(std::move(poly));
  }
  return mesh_from_polygons(welded, 1e-12);
}

}  // namespace polyvem
