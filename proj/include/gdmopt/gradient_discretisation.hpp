// Gradient discretisations: a space of unknowns together with linear
// reconstructions of a function, its gradient and (Neumann) its trace.

#ifndef GDMOPT_GRADIENT_DISCRETISATION_HPP
#define GDMOPT_GRADIENT_DISCRETISATION_HPP

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gdmopt/mesh.hpp"

namespace gdmopt {

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Eigen::Vector2d(const Point&)>;
using TensorFunction = std::function<Eigen::Matrix2d(const Point&)>;

enum class BoundaryCondition { Dirichlet, Neumann };
enum class SchemeKind { ConformingP1, NonConformingP1, HMM };
enum class DofLocation { Vertex, Face, Cell };

/// How an exact function w is compared with reconstructions: w itself for
/// piecewise-linear reconstructions, w(x_K) on each cell for piecewise
/// constant ones.
enum class ProjectionPolicy { Identity, CellPointSampling };

SchemeKind parse_scheme(std::string_view name);
std::string_view scheme_name(SchemeKind kind);

/// Degrees of freedom. Vectors indexed by "full" DOF ids carry every
/// unknown; "free" vectors drop the Dirichlet-masked ones.
struct DofSpace {
  std::vector<DofLocation> location;
  std::vector<int> entity;           // vertex, face or cell id
  std::vector<Point> position;       // interpolation node
  std::vector<bool> masked;          // fixed to 0 by the Dirichlet condition
  std::vector<int> free_index;       // -1 for masked DOFs
  std::vector<int> free_to_full;

  int size() const { return static_cast<int>(location.size()); }
  int num_free() const { return static_cast<int>(free_to_full.size()); }

  Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& free) const;
};

/// Region of a cell on which the reconstructed gradient is constant.
struct GradientPiece {
  Triangle region;
  double area = 0.0;
  Eigen::Matrix<double, 2, Eigen::Dynamic> gradient;  // 2 x local DOFs
};

/// Reconstruction on one cell. The function value at x is
/// [1, x, y] * value * v_local; it is affine for finite elements and
/// constant for HMM.
struct CellReconstruction {
  std::vector<int> dofs;  // full DOF ids
  Eigen::Matrix<double, 3, Eigen::Dynamic> value;
  std::vector<GradientPiece> pieces;
};

/// Trace reconstruction on one boundary face, same affine convention.
struct TraceReconstruction {
  int face = -1;
  std::vector<int> dofs;
  Eigen::Matrix<double, 3, Eigen::Dynamic> value;
};

class GradientDiscretisation {
 public:
  GradientDiscretisation(std::shared_ptr<const PolytopalMesh> mesh, SchemeKind scheme,
                         BoundaryCondition bc, DofSpace dofs,
                         std::vector<CellReconstruction> cells,
                         std::vector<TraceReconstruction> traces, ProjectionPolicy policy);

  const PolytopalMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const PolytopalMesh> mesh_ptr() const { return mesh_; }
  SchemeKind scheme() const { return scheme_; }
  BoundaryCondition bc() const { return bc_; }
  const DofSpace& dofs() const { return dofs_; }
  const std::vector<CellReconstruction>& cells() const { return cells_; }
  /// One entry per boundary face, in increasing face id order.
  const std::vector<TraceReconstruction>& traces() const { return traces_; }
  ProjectionPolicy policy() const { return policy_; }

  /// Nodal interpolant (vertices, face midpoints or cell points); masked
  /// DOFs are set to zero. Returns a full DOF vector.
  Eigen::VectorXd interpolate(const ScalarFunction& phi) const;

  /// Pi_D v at x in cell K (full DOF vector).
  double value(int cell, const Point& x, const Eigen::VectorXd& v) const;
  Eigen::Vector2d gradient(int cell, int piece, const Eigen::VectorXd& v) const;
  double trace(int boundary_index, const Point& x, const Eigen::VectorXd& v) const;

  /// w_T for an exact function, evaluated at x in cell K.
  double projected(int cell, const Point& x, const ScalarFunction& w) const;

 private:
  std::shared_ptr<const PolytopalMesh> mesh_;
  SchemeKind scheme_;
  BoundaryCondition bc_;
  DofSpace dofs_;
  std::vector<CellReconstruction> cells_;
  std::vector<TraceReconstruction> traces_;
  ProjectionPolicy policy_;
};

/// Row vector [1, x, y] used with the affine reconstruction convention.
inline Eigen::RowVector3d affine_row(const Point& x) { return {1.0, x.x(), x.y()}; }

}  // namespace gdmopt

#endif  // GDMOPT_GRADIENT_DISCRETISATION_HPP
