#include "polyvem/mesh.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace polyvem {

void save_mesh(const PolygonMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open " + path + " for writing");
  out << "polymesh 1\n";
  out << "vertices " << mesh.vertex_count() << "\n";
  out << std::setprecision(17);
  for (const Vec2& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
  out << "cells " << mesh.cell_count() << "\n";
  for (const auto& cell : mesh.cells) {
    out << cell.size();
    for (int idx : cell) out << " " << idx;
    out << "\n";
  }
}

PolygonMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "polymesh" || version != 1)
    throw MeshError("not a polymesh 1 file: " + path);

  std::string tag;
  int nv = 0;
  in >> tag >> nv;
  if (tag != "vertices" || nv < 0) throw MeshError("malformed vertices header");
  PolygonMesh mesh;
  mesh.vertices.resize(nv);
  for (int i = 0; i < nv; ++i) in >> mesh.vertices[i].x() >> mesh.vertices[i].y();

  int nc = 0;
  in >> tag >> nc;
  if (tag != "cells" || nc < 0) throw MeshError("malformed cells header");
  for (int c = 0; c < nc; ++c) {
    int k = 0;
    in >> k;
    if (!in || k < 3) throw MeshError("malformed cell record");
    std::vector<int> loop(k);
    for (int& idx : loop) {
      in >> idx;
      if (!in || idx < 0 || idx >= nv)
        throw MeshError("cell references vertex index out of range");
    }
    std::vector<Vec2> pts(k);
    for (int i = 0; i < k; ++i) pts[i] = mesh.vertices[loop[i]];
    if (polygon_area(pts) < 0.0) {
      std::cerr << "polyvem: warning: cell " << c
                << " is clockwise, reversing\n";
      std::reverse(loop.begin(), loop.end());
    }
    mesh.cells.push_back(std::move(loop));
  }
  if (!in) throw MeshError("truncated mesh file: " + path);
  mesh.finalize();
  return mesh;
}

}  // namespace polyvem
