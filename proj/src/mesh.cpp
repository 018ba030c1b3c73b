#include "gdmopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace gdmopt {

namespace {

double signed_area(const std::vector<Point>& v, const std::vector<int>& loop) {
  double a = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = v[loop[i]];
    const Point& q = v[loop[(i + 1) % n]];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

Point polygon_centroid(const std::vector<Point>& v, const std::vector<int>& loop,
                       double area) {
  Point c = Point::Zero();
  const std::size_t n = loop.size();
  // Fan from the first vertex keeps the formula well conditioned for
  // cells far from the origin.
  const Point& o = v[loop[0]];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Point a = v[loop[i]] - o;
    const Point b = v[loop[i + 1]] - o;
    const double t = 0.5 * (a.x() * b.y() - a.y() * b.x());
    c += t * (a + b) / 3.0;
  }
  return o + c / area;
}

void require_subdivisions(int m) {
  if (m < 1) {
    throw std::invalid_argument("mesh subdivision count must be >= 1, got " +
                                std::to_string(m));
  }
}

// Lattice-indexed vertex pool; vertices closer than the lattice spacing
// are identified, which is the dedup rule used when gluing squares.
class VertexPool {
 public:
  explicit VertexPool(int m) : m_(m) {}
  int add(double x, double y) {
    const std::pair<long, long> key{std::lround(x * m_), std::lround(y * m_)};
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(points_.size());
    points_.emplace_back(x, y);
    index_.emplace(key, id);
    return id;
  }
  std::vector<Point> take() { return std::move(points_); }

 private:
  int m_;
  std::map<std::pair<long, long>, int> index_;
  std::vector<Point> points_;
};

// Triangulates [x0, x0+1] x [y0, y0+1] with m subdivisions into `loops`.
void triangulate_unit_block(VertexPool& pool, int m, double x0, double y0,
                            std::vector<std::vector<int>>& loops) {
  const double s = 1.0 / m;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int v00 = pool.add(x0 + i * s, y0 + j * s);
      const int v10 = pool.add(x0 + (i + 1) * s, y0 + j * s);
      const int v11 = pool.add(x0 + (i + 1) * s, y0 + (j + 1) * s);
      const int v01 = pool.add(x0 + i * s, y0 + (j + 1) * s);
      loops.push_back({v00, v10, v11});
      loops.push_back({v00, v11, v01});
    }
  }
}

}  // namespace

PolytopalMesh PolytopalMesh::from_cells(std::vector<Point> vertices,
                                        std::vector<std::vector<int>> loops,
                                        std::vector<Point> cell_points) {
  if (!cell_points.empty() && cell_points.size() != loops.size()) {
    throw std::invalid_argument("cell point count does not match cell count");
  }
  PolytopalMesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.boundary_vertex_.assign(mesh.vertices_.size(), false);
  mesh.cells_.resize(loops.size());

  std::map<std::pair<int, int>, int> face_index;
  for (std::size_t k = 0; k < loops.size(); ++k) {
    auto& loop = loops[k];
    if (loop.size() < 3) throw std::invalid_argument("cell with fewer than 3 vertices");
    double area = signed_area(mesh.vertices_, loop);
    if (area < 0.0) {
      std::reverse(loop.begin(), loop.end());
      area = -area;
    }
    if (!(area > 0.0)) throw std::invalid_argument("degenerate cell " + std::to_string(k));

    Cell& cell = mesh.cells_[k];
    cell.vertices = loop;
    cell.area = area;
    cell.centroid = polygon_centroid(mesh.vertices_, loop, area);
    cell.point = cell_points.empty() ? cell.centroid : cell_points[k];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      for (std::size_t j = i + 1; j < loop.size(); ++j) {
        cell.diameter = std::max(
            cell.diameter, (mesh.vertices_[loop[i]] - mesh.vertices_[loop[j]]).norm());
      }
    }
    mesh.h_ = std::max(mesh.h_, cell.diameter);

    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % n];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = face_index.try_emplace({key.first, key.second},
                                                   static_cast<int>(mesh.faces_.size()));
      if (inserted) {
        Face f;
        f.vertices = {a, b};
        f.cells = {static_cast<int>(k), -1};
        f.length = (mesh.vertices_[b] - mesh.vertices_[a]).norm();
        f.midpoint = 0.5 * (mesh.vertices_[a] + mesh.vertices_[b]);
        mesh.faces_.push_back(f);
      } else {
        Face& f = mesh.faces_[it->second];
        if (f.cells[1] >= 0) {
          throw std::invalid_argument("face shared by more than two cells");
        }
        f.cells[1] = static_cast<int>(k);
      }
      const Point t = mesh.vertices_[b] - mesh.vertices_[a];
      const Point normal = Point(t.y(), -t.x()) / t.norm();
      const Face& f = mesh.faces_[it->second];
      const double d = (f.midpoint - cell.point).dot(normal);
      if (!(d > 1e-12 * cell.diameter)) {
        throw std::invalid_argument("cell " + std::to_string(k) +
                                    " is not star-shaped with respect to its cell point");
      }
      cell.faces.push_back(it->second);
      cell.normals.push_back(normal);
      cell.distances.push_back(d);
    }
  }
  for (const Face& f : mesh.faces_) {
    if (f.boundary()) {
      mesh.boundary_vertex_[f.vertices[0]] = true;
      mesh.boundary_vertex_[f.vertices[1]] = true;
    }
  }
  return mesh;
}

double PolytopalMesh::total_area() const {
  double a = 0.0;
  for (const Cell& c : cells_) a += c.area;
  return a;
}

CellShape PolytopalMesh::shape() const {
  bool tri = false;
  bool quad = false;
  for (const Cell& c : cells_) {
    if (c.vertices.size() == 3) {
      tri = true;
    } else if (c.vertices.size() == 4) {
      quad = true;
    } else {
      return CellShape::Mixed;
    }
  }
  if (tri && quad) return CellShape::Mixed;
  return quad ? CellShape::Quadrilaterals : CellShape::Triangles;
}

std::vector<Triangle> PolytopalMesh::cell_triangles(int k) const {
  const Cell& cell = cells_[k];
  if (cell.vertices.size() == 3) {
    return {Triangle{vertices_[cell.vertices[0]], vertices_[cell.vertices[1]],
                     vertices_[cell.vertices[2]]}};
  }
  std::vector<Triangle> out;
  out.reserve(cell.faces.size());
  for (int f : cell.faces) {
    const Face& face = faces_[f];
    out.push_back(Triangle{cell.point, vertices_[face.vertices[0]], vertices_[face.vertices[1]]});
  }
  return out;
}

PolytopalMesh build_unit_square_triangulation(int m) {
  require_subdivisions(m);
  VertexPool pool(m);
  std::vector<std::vector<int>> loops;
  triangulate_unit_block(pool, m, 0.0, 0.0, loops);
  return PolytopalMesh::from_cells(pool.take(), std::move(loops));
}

PolytopalMesh build_lshape_triangulation(int m) {
  require_subdivisions(m);
  VertexPool pool(m);
  std::vector<std::vector<int>> loops;
  triangulate_unit_block(pool, m, -1.0, -1.0, loops);
  triangulate_unit_block(pool, m, -1.0, 0.0, loops);
  triangulate_unit_block(pool, m, 0.0, 0.0, loops);
  return PolytopalMesh::from_cells(pool.take(), std::move(loops));
}

PolytopalMesh build_cartesian_mesh(int m, double shift) {
  require_subdivisions(m);
  if (!(shift >= 0.0)) throw std::invalid_argument("cell-point shift must be >= 0");
  const double s = 1.0 / m;
  std::vector<Point> vertices;
  vertices.reserve((m + 1) * (m + 1));
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) vertices.emplace_back(i * s, j * s);
  }
  std::vector<std::vector<int>> loops;
  std::vector<Point> points;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int v00 = j * (m + 1) + i;
      loops.push_back({v00, v00 + 1, v00 + m + 2, v00 + m + 1});
      points.emplace_back((i + 0.5 + shift) * s, (j + 0.5 + shift) * s);
    }
  }
  return PolytopalMesh::from_cells(std::move(vertices), std::move(loops), std::move(points));
}

PolytopalMesh uniform_refine(const PolytopalMesh& mesh) {
  const CellShape shape = mesh.shape();
  if (shape == CellShape::Mixed) {
    throw std::invalid_argument("uniform_refine supports triangle-only or quadrilateral-only meshes");
  }
  std::vector<Point> vertices = mesh.vertices();
  const int nv = mesh.num_vertices();
  for (const Face& f : mesh.faces()) vertices.push_back(f.midpoint);
  auto mid = [&](const Cell& c, std::size_t i) { return nv + c.faces[i]; };

  std::vector<std::vector<int>> loops;
  std::vector<Point> points;
  for (const Cell& c : mesh.cells()) {
    const auto& v = c.vertices;
    if (shape == CellShape::Triangles) {
      const int ab = mid(c, 0), bc = mid(c, 1), ca = mid(c, 2);
      loops.push_back({v[0], ab, ca});
      loops.push_back({ab, v[1], bc});
      loops.push_back({ca, bc, v[2]});
      loops.push_back({ab, bc, ca});
    } else {
      const int ab = mid(c, 0), bc = mid(c, 1), cd = mid(c, 2), da = mid(c, 3);
      const int ctr = static_cast<int>(vertices.size());
      vertices.push_back(c.centroid);
      loops.push_back({v[0], ab, ctr, da});
      loops.push_back({ab, v[1], bc, ctr});
      loops.push_back({ctr, bc, v[2], cd});
      loops.push_back({da, ctr, cd, v[3]});
    }
  }
  if (shape == CellShape::Triangles) {
    return PolytopalMesh::from_cells(std::move(vertices), std::move(loops));
  }
  for (std::size_t k = 0; k < loops.size(); ++k) {
    const Cell& parent = mesh.cells()[k / 4];
    Point c = Point::Zero();
    for (int v : loops[k]) c += vertices[v];
    c /= 4.0;  // parallelogram children: vertex mean is the centroid
    points.push_back(c + 0.5 * (parent.point - parent.centroid));
  }
  return PolytopalMesh::from_cells(std::move(vertices), std::move(loops), std::move(points));
}

double inner_radius(const PolytopalMesh& mesh, int k) {
  const Cell& cell = mesh.cells()[k];
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cell.faces.size(); ++i) {
    const Face& f = mesh.faces()[cell.faces[i]];
    rho = std::min(rho, (f.midpoint - cell.centroid).dot(cell.normals[i]));
  }
  return rho;
}

MeshQuality quality(const PolytopalMesh& mesh) {
  MeshQuality q;
  q.h = mesh.h();
  for (int k = 0; k < mesh.num_cells(); ++k) {
    const Cell& cell = mesh.cells()[k];
    q.eta = std::max(q.eta, cell.diameter / inner_radius(mesh, k));
    q.chi = std::max(q.chi, q.h * q.h / cell.area);
  }
  return q;
}

void write_mesh_text(const PolytopalMesh& mesh, std::ostream& os) {
  os << mesh.num_vertices() << ' ' << mesh.num_cells() << ' ' << mesh.num_faces() << '\n';
  for (const Point& p : mesh.vertices()) os << p.x() << ' ' << p.y() << '\n';
  for (const Cell& c : mesh.cells()) {
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
      os << (i ? " " : "") << c.vertices[i];
    }
    os << '\n';
  }
  for (const Face& f : mesh.faces()) {
    os << f.vertices[0] << ' ' << f.vertices[1] << ' ' << f.cells[0] << ' ' << f.cells[1] << '\n';
  }
}

}  // namespace gdmopt
