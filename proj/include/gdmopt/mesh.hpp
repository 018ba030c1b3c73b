// Polytopal meshes of planar domains: triangulations and Cartesian grids
// with movable cell points, uniform refinement and quality measures.

#ifndef GDMOPT_MESH_HPP
#define GDMOPT_MESH_HPP

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace gdmopt {

using Point = Eigen::Vector2d;
using Triangle = std::array<Point, 3>;

/// Cell of a polytopal mesh. Per-face data (normals, orthogonal distances)
/// is stored in the same order as `faces`, which follows the vertex loop:
/// faces[i] joins vertices[i] and vertices[i+1].
struct Cell {
  std::vector<int> vertices;  // counter-clockwise loop
  std::vector<int> faces;
  std::vector<Point> normals;       // outward unit normal n_{K,sigma}
  std::vector<double> distances;    // d_{K,sigma} = (xbar_sigma - x_K) . n_{K,sigma}
  double area = 0.0;
  double diameter = 0.0;
  Point centroid = Point::Zero();
  Point point = Point::Zero();      // x_K, star-shapedness centre
};

struct Face {
  std::array<int, 2> vertices{-1, -1};
  std::array<int, 2> cells{-1, -1};  // cells[1] == -1 on the boundary
  double length = 0.0;
  Point midpoint = Point::Zero();
  bool boundary() const { return cells[1] < 0; }
};

enum class CellShape { Triangles, Quadrilaterals, Mixed };

class PolytopalMesh {
 public:
  /// Builds the face structure from vertex loops. Loops may be given in
  /// either orientation; they are stored counter-clockwise. When
  /// `cell_points` is empty, x_K is the centroid.
  static PolytopalMesh from_cells(std::vector<Point> vertices,
                                  std::vector<std::vector<int>> loops,
                                  std::vector<Point> cell_points = {});

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<bool>& boundary_vertices() const { return boundary_vertex_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }

  /// Maximal cell diameter.
  double h() const { return h_; }
  double total_area() const;
  CellShape shape() const;

  /// Sub-triangles (x_K, sigma) tiling cell K; a triangle cell is returned as
  /// itself. These are the D_{K,sigma} regions for polygonal cells.
  std::vector<Triangle> cell_triangles(int cell) const;

 private:
  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
  std::vector<bool> boundary_vertex_;
  double h_ = 0.0;
};

struct MeshQuality {
  double h = 0.0;
  double eta = 0.0;  // max_K diam(K) / rho_K
  double chi = 0.0;  // max_K h^2 / |K|
};

/// Uniform right-triangle mesh of (0,1)^2 with m subdivisions per side and
/// all diagonals from lower-left to upper-right.
PolytopalMesh build_unit_square_triangulation(int m);

/// Triangulation of (-1,1)^2 \ ([0,1) x (-1,0]) with m subdivisions per unit edge.
PolytopalMesh build_lshape_triangulation(int m);

/// m x m squares on (0,1)^2 with x_K = centroid + shift * (h_x, h_y).
PolytopalMesh build_cartesian_mesh(int m, double shift = 0.0);

/// Red refinement of triangles, 4-split of quadrilaterals. Quadrilateral
/// children keep the parent's cell-point offset relative to their size.
PolytopalMesh uniform_refine(const PolytopalMesh& mesh);

MeshQuality quality(const PolytopalMesh& mesh);

/// rho_K: distance from the centroid to the nearest face line.
double inner_radius(const PolytopalMesh& mesh, int cell);

/// Debug dump: "vertices cells faces" header, then coordinates, cell loops
/// and face records.
void write_mesh_text(const PolytopalMesh& mesh, std::ostream& os);

}  // namespace gdmopt

#endif  // GDMOPT_MESH_HPP
