// Polygonal meshes of the unit square: data structure, generators for the
// four mesh families (unstructured triangles, squares, hexagons,
// Voronoi-Lloyd), shape-regularity checks and text-file I/O.

#ifndef POLYVEM_MESH_HPP
#define POLYVEM_MESH_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace polyvem {

using Vec2 = Eigen::Vector2d;

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Derived per-cell geometric quantities.
struct CellGeometry {
  double diameter = 0.0;   ///< max pairwise vertex distance
  Vec2 barycenter{0, 0};   ///< area centroid
  double area = 0.0;
  double perimeter = 0.0;
  int vertex_count = 0;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
};

struct MeshEdge {
  int v0 = -1, v1 = -1;       // v0 < v1
  int cell_a = -1, cell_b = -1;
  bool boundary() const { return cell_b < 0; }
};

/// Immutable after finalize(); cells are CCW vertex-index loops.
class PolygonMesh {
public:
  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<MeshEdge> edges;              // filled by finalize()
  std::vector<bool> boundary_vertex;        // filled by finalize()

  /// Builds edge connectivity and boundary flags, validates the cell
  /// complex (index ranges, orientation, simplicity, edge incidence).
  /// Throws MeshError on an invalid mesh.
  void finalize();

  int cell_count() const { return static_cast<int>(cells.size()); }
  int vertex_count() const { return static_cast<int>(vertices.size()); }

  CellGeometry cell_geometry(int cell) const;
  double total_area() const;

  /// Index into edges for the edge {a,b}; throws if absent.
  int edge_index(int a, int b) const;

private:
  // minmax vertex pair -> edge index, built in finalize()
  std::vector<std::pair<std::uint64_t, int>> edge_lookup_;
};

double polygon_area(const std::vector<Vec2>& pts);
Vec2 polygon_centroid(const std::vector<Vec2>& pts);

/// Merges a polygon soup (one vertex loop per cell, coordinates possibly
/// differing by roundoff across cells) into a conforming mesh.
PolygonMesh mesh_from_polygons(const std::vector<std::vector<Vec2>>& polys,
                               double merge_tol = 1e-7);

// --- generators (all tile [0,1]^2, deterministic in the seed) ---

PolygonMesh generate_square_mesh(int n);

/// Jittered n x n grid, each quad split along a pseudo-random diagonal.
/// jitter is the interior-vertex displacement bound in units of 1/n.
PolygonMesh generate_triangle_mesh(int n, std::uint64_t seed,
                                   double jitter = 0.25);

/// Regular-hexagon tiling clipped to the unit square; n = rows.
PolygonMesh generate_hex_mesh(int n);

/// Voronoi diagram of random seeds relaxed by Lloyd centroid iterations.
PolygonMesh generate_voronoi_lloyd(int n_seeds, int iterations,
                                   std::uint64_t seed);

/// Largest centroid displacement of the last executed Lloyd iteration
/// (0 when iterations == 0); refreshed by generate_voronoi_lloyd.
double last_lloyd_displacement();

// --- regularity ---

struct RegularityReport {
  double gamma = 0.0;        // inscribed-ball radius over diameter
  double gamma_tilde = 0.0;  // min vertex distance over diameter
  bool pass = false;
};

/// Star-shapedness check for one cell: gamma from a coarse-to-fine grid
/// search over the polygon kernel (resolution ~ diameter/1000).
RegularityReport check_cell_regularity(const PolygonMesh& mesh, int cell,
                                       double gamma_min, double gamma_tilde_min);

std::vector<RegularityReport> check_regularity(const PolygonMesh& mesh,
                                               double gamma_min,
                                               double gamma_tilde_min);

// --- I/O, line-oriented "polymesh 1" format ---

void save_mesh(const PolygonMesh& mesh, const std::string& path);
PolygonMesh load_mesh(const std::string& path);

}  // namespace polyvem

#endif
