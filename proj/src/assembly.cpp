#include "gdmopt/assembly.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "gdmopt/quadrature.hpp"

namespace gdmopt {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

const TriangleRule<double>& rule_gauss3() {
  static const auto r = triangle_rule<double>(QuadratureKind::Gauss3);
  return r;
}

const TriangleRule<double>& rule_gauss7() {
  static const auto r = triangle_rule<double>(QuadratureKind::Gauss7);
  return r;
}

Point at(const Triangle& t, const Eigen::Vector3d& l) {
  return l(0) * t[0] + l(1) * t[1] + l(2) * t[2];
}

// Scatters a local symmetric matrix into free-DOF triplets.
void scatter(const DofSpace& dofs, const std::vector<int>& local, const Eigen::MatrixXd& m,
             Triplets& out) {
  for (std::size_t i = 0; i < local.size(); ++i) {
    const int fi = dofs.free_index[local[i]];
    if (fi < 0) continue;
    for (std::size_t j = 0; j < local.size(); ++j) {
      const int fj = dofs.free_index[local[j]];
      if (fj < 0) continue;
      out.emplace_back(fi, fj, m(i, j));
    }
  }
}

SparseMatrix from_triplets(int rows, int cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Point face_point(const PolytopalMesh& mesh, const Face& f, double s) {
  return (1.0 - s) * mesh.vertices()[f.vertices[0]] + s * mesh.vertices()[f.vertices[1]];
}

}  // namespace

Eigen::Matrix2d identity_tensor(const Point&) { return Eigen::Matrix2d::Identity(); }

SparseMatrix assemble_gradient_gram(const GradientDiscretisation& gd, const TensorFunction& A) {
  Triplets t;
  for (const CellReconstruction& c : gd.cells()) {
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(c.dofs.size(), c.dofs.size());
    for (const GradientPiece& p : c.pieces) {
      const Point centre = (p.region[0] + p.region[1] + p.region[2]) / 3.0;
      local += p.area * p.gradient.transpose() * A(centre) * p.gradient;
    }
    scatter(gd.dofs(), c.dofs, local, t);
  }
  const int n = gd.dofs().num_free();
  return from_triplets(n, n, t);
}

SparseMatrix assemble_mass(const GradientDiscretisation& gd) {
  const auto& rule = rule_gauss3();
  Triplets t;
  for (const CellReconstruction& c : gd.cells()) {
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(c.dofs.size(), c.dofs.size());
    for (const GradientPiece& p : c.pieces) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Eigen::RowVectorXd phi = affine_row(at(p.region, rule.barycentric[q])) * c.value;
        local += p.area * rule.weights[q] * phi.transpose() * phi;
      }
    }
    scatter(gd.dofs(), c.dofs, local, t);
  }
  const int n = gd.dofs().num_free();
  return from_triplets(n, n, t);
}

SparseMatrix assemble_trace_mass(const GradientDiscretisation& gd) {
  if (gd.bc() != BoundaryCondition::Neumann) {
    throw std::invalid_argument("trace reconstruction is only defined for Neumann discretisations");
  }
  const auto gl = gauss_legendre<double>(2);
  Triplets t;
  for (const TraceReconstruction& tr : gd.traces()) {
    const Face& f = gd.mesh().faces()[tr.face];
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(tr.dofs.size(), tr.dofs.size());
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const Eigen::RowVectorXd phi = affine_row(face_point(gd.mesh(), f, gl.points[q])) * tr.value;
      local += f.length * gl.weights[q] * phi.transpose() * phi;
    }
    scatter(gd.dofs(), tr.dofs, local, t);
  }
  const int n = gd.dofs().num_free();
  return from_triplets(n, n, t);
}

SparseMatrix assemble_stiffness(const GradientDiscretisation& gd, const TensorFunction& A,
                                double c0) {
  if (gd.bc() == BoundaryCondition::Neumann && !(c0 > 0.0)) {
    throw std::invalid_argument("Neumann problems need a reaction coefficient c0 > 0");
  }
  SparseMatrix K = assemble_gradient_gram(gd, A);
  if (c0 != 0.0) K += c0 * assemble_mass(gd);
  return K;
}

SparseMatrix assemble_cell_coupling(const GradientDiscretisation& gd) {
  const auto& rule = rule_gauss3();
  Triplets t;
  for (int k = 0; k < static_cast<int>(gd.cells().size()); ++k) {
    const CellReconstruction& c = gd.cells()[k];
    Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(c.dofs.size());
    for (const GradientPiece& p : c.pieces) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        local += p.area * rule.weights[q] * affine_row(at(p.region, rule.barycentric[q])) * c.value;
      }
    }
    for (std::size_t j = 0; j < c.dofs.size(); ++j) {
      const int fj = gd.dofs().free_index[c.dofs[j]];
      if (fj >= 0) t.emplace_back(fj, k, local(j));
    }
  }
  return from_triplets(gd.dofs().num_free(), gd.mesh().num_cells(), t);
}

SparseMatrix assemble_boundary_coupling(const GradientDiscretisation& gd) {
  if (gd.bc() != BoundaryCondition::Neumann) {
    throw std::invalid_argument("boundary coupling needs a Neumann discretisation");
  }
  const auto gl = gauss_legendre<double>(2);
  Triplets t;
  for (int s = 0; s < static_cast<int>(gd.traces().size()); ++s) {
    const TraceReconstruction& tr = gd.traces()[s];
    const Face& f = gd.mesh().faces()[tr.face];
    Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(tr.dofs.size());
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      local += f.length * gl.weights[q] * affine_row(face_point(gd.mesh(), f, gl.points[q])) *
               tr.value;
    }
    for (std::size_t j = 0; j < tr.dofs.size(); ++j) {
      const int fj = gd.dofs().free_index[tr.dofs[j]];
      if (fj >= 0) t.emplace_back(fj, s, local(j));
    }
  }
  return from_triplets(gd.dofs().num_free(), static_cast<int>(gd.traces().size()), t);
}

Eigen::VectorXd assemble_load(const GradientDiscretisation& gd, const ScalarFunction& F,
                              const ScalarFunction& G) {
  if (G && gd.bc() != BoundaryCondition::Neumann) {
    throw std::invalid_argument("boundary source supplied for a Dirichlet problem");
  }
  const auto& rule = rule_gauss7();
  const DofSpace& dofs = gd.dofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs.num_free());
  if (F) {
    for (const CellReconstruction& c : gd.cells()) {
      Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(c.dofs.size());
      for (const GradientPiece& p : c.pieces) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const Point x = at(p.region, rule.barycentric[q]);
          local += p.area * rule.weights[q] * F(x) * affine_row(x) * c.value;
        }
      }
      for (std::size_t j = 0; j < c.dofs.size(); ++j) {
        const int fj = dofs.free_index[c.dofs[j]];
        if (fj >= 0) b(fj) += local(j);
      }
    }
  }
  if (G) {
    const auto gl = gauss_legendre<double>(3);
    for (const TraceReconstruction& tr : gd.traces()) {
      const Face& f = gd.mesh().faces()[tr.face];
      Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(tr.dofs.size());
      for (std::size_t q = 0; q < gl.points.size(); ++q) {
        const Point x = face_point(gd.mesh(), f, gl.points[q]);
        local += f.length * gl.weights[q] * G(x) * affine_row(x) * tr.value;
      }
      for (std::size_t j = 0; j < tr.dofs.size(); ++j) {
        const int fj = dofs.free_index[tr.dofs[j]];
        if (fj >= 0) b(fj) += local(j);
      }
    }
  }
  return b;
}

SpdSolveResult solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  SpdSolveResult out;
  if (A.rows() == 0) {
    out.x = Eigen::VectorXd::Zero(0);
    return out;
  }
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) {
    throw SolverError("solve_spd: factorisation failed (matrix singular or not SPD)");
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 1e-14 * dmax)) {
      std::ostringstream msg;
      msg << "solve_spd: matrix is not SPD, pivot " << i << " (permuted order) = " << d(i);
      throw SolverError(msg.str());
    }
  }
  const double bnorm = b.norm();
  out.x = ldlt.solve(b);
  if (bnorm == 0.0) {
    out.x.setZero();
    return out;
  }
  Eigen::VectorXd r = b - A * out.x;
  for (int it = 0; it < 5 && r.norm() > 1e-12 * bnorm; ++it) {
    out.x += ldlt.solve(r);
    r = b - A * out.x;
  }
  out.relative_residual = r.norm() / bnorm;
  if (!(out.relative_residual <= 1e-12)) {
    std::ostringstream msg;
    msg << "solve_spd: relative residual " << out.relative_residual
        << " above 1e-12 after refinement";
    throw SolverError(msg.str());
  }
  return out;
}

Eigen::VectorXd solve_pde(const GradientDiscretisation& gd, const ScalarFunction& F,
                          const ScalarFunction& G, const TensorFunction& A, double c0) {
  const SparseMatrix K = assemble_stiffness(gd, A, c0);
  const Eigen::VectorXd b = assemble_load(gd, F, G);
  return gd.dofs().expand(solve_spd(K, b).x);
}

}  // namespace gdmopt
