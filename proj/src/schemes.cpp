#include "gdmopt/schemes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gdmopt {

namespace {

void require_simplicial(const PolytopalMesh& mesh, std::string_view scheme) {
  if (mesh.shape() != CellShape::Triangles) {
    throw std::invalid_argument(std::string(scheme) + " requires a triangular mesh");
  }
}

void finalise_free(DofSpace& d) {
  d.free_index.assign(d.size(), -1);
  d.free_to_full.clear();
  for (int i = 0; i < d.size(); ++i) {
    if (!d.masked[i]) {
      d.free_index[i] = static_cast<int>(d.free_to_full.size());
      d.free_to_full.push_back(i);
    }
  }
}

// Columns are the barycentric coordinates lambda_j in the [1, x, y] basis.
Eigen::Matrix3d barycentric_coefficients(const PolytopalMesh& mesh, const Cell& cell) {
  Eigen::Matrix3d v;
  for (int i = 0; i < 3; ++i) v.row(i) = affine_row(mesh.vertices()[cell.vertices[i]]);
  return v.inverse();
}

Triangle cell_triangle(const PolytopalMesh& mesh, const Cell& cell) {
  return {mesh.vertices()[cell.vertices[0]], mesh.vertices()[cell.vertices[1]],
          mesh.vertices()[cell.vertices[2]]};
}

// Traces for affine reconstructions: restriction of the owning cell's
// function to the boundary face.
std::vector<TraceReconstruction> affine_traces(const PolytopalMesh& mesh,
                                               const std::vector<CellReconstruction>& cells) {
  std::vector<TraceReconstruction> traces;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.faces()[f];
    if (!face.boundary()) continue;
    const CellReconstruction& c = cells[face.cells[0]];
    traces.push_back({f, c.dofs, c.value});
  }
  return traces;
}

}  // namespace

GradientDiscretisation make_conforming_p1(std::shared_ptr<const PolytopalMesh> mesh,
                                          BoundaryCondition bc) {
  require_simplicial(*mesh, "conforming P1");
  DofSpace dofs;
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    dofs.location.push_back(DofLocation::Vertex);
    dofs.entity.push_back(v);
    dofs.position.push_back(mesh->vertices()[v]);
    dofs.masked.push_back(bc == BoundaryCondition::Dirichlet && mesh->boundary_vertices()[v]);
  }
  finalise_free(dofs);

  std::vector<CellReconstruction> cells;
  cells.reserve(mesh->num_cells());
  for (const Cell& cell : mesh->cells()) {
    CellReconstruction c;
    c.dofs = cell.vertices;
    c.value = barycentric_coefficients(*mesh, cell);
    c.pieces.push_back({cell_triangle(*mesh, cell), cell.area, c.value.bottomRows<2>()});
    cells.push_back(std::move(c));
  }
  auto traces = bc == BoundaryCondition::Neumann ? affine_traces(*mesh, cells)
                                                 : std::vector<TraceReconstruction>{};
  return {std::move(mesh), SchemeKind::ConformingP1, bc, std::move(dofs), std::move(cells),
          std::move(traces), ProjectionPolicy::Identity};
}

GradientDiscretisation make_ncp1(std::shared_ptr<const PolytopalMesh> mesh,
                                 BoundaryCondition bc) {
  require_simplicial(*mesh, "non-conforming P1");
  DofSpace dofs;
  for (int f = 0; f < mesh->num_faces(); ++f) {
    const Face& face = mesh->faces()[f];
    dofs.location.push_back(DofLocation::Face);
    dofs.entity.push_back(f);
    dofs.position.push_back(face.midpoint);
    dofs.masked.push_back(bc == BoundaryCondition::Dirichlet && face.boundary());
  }
  finalise_free(dofs);

  std::vector<CellReconstruction> cells;
  cells.reserve(mesh->num_cells());
  for (const Cell& cell : mesh->cells()) {
    // faces[i] joins vertices i and i+1, so it is opposite vertex i+2; the
    // Crouzeix-Raviart function of that face is 1 - 2 lambda_{i+2}.
    const Eigen::Matrix3d lambda = barycentric_coefficients(*mesh, cell);
    CellReconstruction c;
    c.dofs = cell.faces;
    c.value.resize(3, 3);
    for (int i = 0; i < 3; ++i) {
      c.value.col(i) = Eigen::Vector3d::UnitX() - 2.0 * lambda.col((i + 2) % 3);
    }
    c.pieces.push_back({cell_triangle(*mesh, cell), cell.area, c.value.bottomRows<2>()});
    cells.push_back(std::move(c));
  }
  auto traces = bc == BoundaryCondition::Neumann ? affine_traces(*mesh, cells)
                                                 : std::vector<TraceReconstruction>{};
  return {std::move(mesh), SchemeKind::NonConformingP1, bc, std::move(dofs), std::move(cells),
          std::move(traces), ProjectionPolicy::Identity};
}

GradientDiscretisation make_hmm(std::shared_ptr<const PolytopalMesh> mesh,
                                BoundaryCondition bc) {
  const int nc = mesh->num_cells();
  DofSpace dofs;
  for (int k = 0; k < nc; ++k) {
    dofs.location.push_back(DofLocation::Cell);
    dofs.entity.push_back(k);
    dofs.position.push_back(mesh->cells()[k].point);
    dofs.masked.push_back(false);
  }
  for (int f = 0; f < mesh->num_faces(); ++f) {
    const Face& face = mesh->faces()[f];
    dofs.location.push_back(DofLocation::Face);
    dofs.entity.push_back(f);
    dofs.position.push_back(face.midpoint);
    dofs.masked.push_back(bc == BoundaryCondition::Dirichlet && face.boundary());
  }
  finalise_free(dofs);

  const double stab = std::numbers::sqrt2;  // sqrt(n), n = 2
  std::vector<CellReconstruction> cells;
  cells.reserve(nc);
  for (int k = 0; k < nc; ++k) {
    const Cell& cell = mesh->cells()[k];
    const int nf = static_cast<int>(cell.faces.size());
    for (double d : cell.distances) {
      if (!(d > 0.0)) throw std::invalid_argument("HMM requires d_{K,sigma} > 0");
    }
    CellReconstruction c;
    c.dofs.push_back(k);
    for (int f : cell.faces) c.dofs.push_back(nc + f);
    c.value = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, nf + 1);
    c.value(0, 0) = 1.0;

    // Consistent gradient, local DOF 0 is v_K.
    Eigen::Matrix<double, 2, Eigen::Dynamic> gbar =
        Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, nf + 1);
    for (int i = 0; i < nf; ++i) {
      gbar.col(i + 1) = mesh->faces()[cell.faces[i]].length / cell.area * cell.normals[i];
    }
    for (int i = 0; i < nf; ++i) {
      const Face& face = mesh->faces()[cell.faces[i]];
      // residual r(v) = v_sigma - v_K - gbar v . (xbar_sigma - x_K)
      Eigen::RowVectorXd residual = -(face.midpoint - cell.point).transpose() * gbar;
      residual(0) -= 1.0;
      residual(i + 1) += 1.0;
      GradientPiece piece;
      piece.region = Triangle{cell.point, mesh->vertices()[face.vertices[0]],
                              mesh->vertices()[face.vertices[1]]};
      piece.area = 0.5 * face.length * cell.distances[i];
      piece.gradient = gbar + (stab / cell.distances[i]) * cell.normals[i] * residual;
      c.pieces.push_back(std::move(piece));
    }
    cells.push_back(std::move(c));
  }

  std::vector<TraceReconstruction> traces;
  if (bc == BoundaryCondition::Neumann) {
    for (int f = 0; f < mesh->num_faces(); ++f) {
      if (!mesh->faces()[f].boundary()) continue;
      Eigen::Matrix<double, 3, Eigen::Dynamic> value = Eigen::Matrix<double, 3, 1>::UnitX();
      traces.push_back({f, {nc + f}, value});
    }
  }
  return {std::move(mesh), SchemeKind::HMM, bc, std::move(dofs), std::move(cells),
          std::move(traces), ProjectionPolicy::CellPointSampling};
}

GradientDiscretisation make_scheme(SchemeKind kind, std::shared_ptr<const PolytopalMesh> mesh,
                                   BoundaryCondition bc) {
  switch (kind) {
    case SchemeKind::ConformingP1:
      return make_conforming_p1(std::move(mesh), bc);
    case SchemeKind::NonConformingP1:
      return make_ncp1(std::move(mesh), bc);
    case SchemeKind::HMM:
      return make_hmm(std::move(mesh), bc);
  }
  throw std::invalid_argument("unknown scheme kind");
}

}  // namespace gdmopt
