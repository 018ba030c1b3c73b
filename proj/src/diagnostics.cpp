#include "gdmopt/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gdmopt/quadrature.hpp"

namespace gdmopt {

namespace {

constexpr int kDenseThreshold = 200;

Point at(const Triangle& t, const Eigen::Vector3d& l) {
  return l(0) * t[0] + l(1) * t[1] + l(2) * t[2];
}

Point face_point(const PolytopalMesh& mesh, const Face& f, double s) {
  return (1.0 - s) * mesh.vertices()[f.vertices[0]] + s * mesh.vertices()[f.vertices[1]];
}

void require_unknowns(const GradientDiscretisation& gd) {
  if (gd.dofs().num_free() == 0) {
    throw std::invalid_argument("discretisation has no free unknowns");
  }
}

// Q_theta = G / theta + M / (1 - theta), whose energy bounds ||.||_D^2 from
// below with equality at the optimal theta.
SparseMatrix split_norm_matrix(const SparseMatrix& G, const SparseMatrix& M, double theta) {
  return (1.0 / theta) * G + (1.0 / (1.0 - theta)) * M;
}

void check_factorisation(const Eigen::SimplicialLDLT<SparseMatrix>& ldlt) {
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    throw SolverError("diagnostics: matrix is singular or indefinite");
  }
}

// Solve with a few refinement steps. Q_theta gets badly conditioned for
// theta near 0 or 1, so no residual contract is imposed here.
template <typename Rhs>
Eigen::MatrixXd refined_solve(const SparseMatrix& A, const Rhs& b) {
  const Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  check_factorisation(ldlt);
  Eigen::MatrixXd x = ldlt.solve(b);
  for (int it = 0; it < 2; ++it) x += ldlt.solve(b - A * x);
  return x;
}

// Largest eigenvalue of T x = lambda Q x for T supported on few rows
// (boundary unknowns): reduces to the dense pencil (T_bb, (R Q^{-1} R^T)^{-1}).
double low_rank_eigenvalue(const SparseMatrix& T, const SparseMatrix& Q) {
  std::vector<int> rows;
  for (int j = 0; j < T.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(T, j); it; ++it) {
      if (it.value() != 0.0) {
        rows.push_back(j);
        break;
      }
    }
  }
  if (rows.empty()) return 0.0;
  const int nb = static_cast<int>(rows.size());
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(Q.rows(), nb);
  for (int i = 0; i < nb; ++i) R(rows[i], i) = 1.0;
  const Eigen::MatrixXd Z = refined_solve(Q, R);
  Eigen::MatrixXd W(nb, nb), Tbb(nb, nb);
  const Eigen::MatrixXd Td(T);
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < nb; ++j) {
      W(i, j) = 0.5 * (Z(rows[i], j) + Z(rows[j], i));
      Tbb(i, j) = Td(rows[i], rows[j]);
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) throw SolverError("diagnostics: reduced trace pencil not SPD");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd S = L.transpose() * Tbb * L;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

// Maximises a function of the splitting parameter theta in (0, 1): coarse
// scan, then golden-section search around the best sample.
double maximise_over_split(const std::function<double(double)>& f) {
  constexpr int n = 40;
  int best = 1;
  double fbest = f(1.0 / n);
  for (int i = 2; i < n; ++i) {
    const double v = f(static_cast<double>(i) / n);
    if (v > fbest) {
      fbest = v;
      best = i;
    }
  }
  double lo = std::max((best - 1.0) / n, 1e-6);
  double hi = std::min((best + 1.0) / n, 1.0 - 1e-6);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-7) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
  }
  return std::max({fbest, f1, f2});
}

}  // namespace

double largest_generalised_eigenvalue(const SparseMatrix& A, const SparseMatrix& B,
                                      EigenMethod method) {
  const Eigen::Index n = A.rows();
  if (n == 0) throw std::invalid_argument("empty eigenproblem");
  if (method == EigenMethod::Auto) {
    method = n < kDenseThreshold ? EigenMethod::Dense : EigenMethod::PowerIteration;
  }
  if (method == EigenMethod::Dense) {
    const Eigen::MatrixXd a(A), b(B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverError("dense generalised eigensolve failed");
    return es.eigenvalues().maxCoeff();
  }

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(B);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    throw SolverError("power iteration: right-hand matrix is singular or indefinite");
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * std::sin(1.0 + i);
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    const Eigen::VectorXd y = ldlt.solve(A * x);
    const double next = y.dot(A * y) / y.dot(B * y);
    x = y / std::sqrt(y.dot(B * y));
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) return next;
    lambda = next;
  }
  throw SolverError("power iteration did not converge");
}

double compute_cd(const GradientDiscretisation& gd, EigenMethod method) {
  require_unknowns(gd);
  const SparseMatrix G = assemble_gradient_gram(gd);
  const SparseMatrix M = assemble_mass(gd);
  if (gd.bc() == BoundaryCondition::Dirichlet) {
    return std::sqrt(largest_generalised_eigenvalue(M, G, method));
  }
  // ||w||_D = min_theta sqrt(||grad w||^2/theta + ||Pi w||^2/(1-theta)), so the
  // trace ratio is the maximum over theta of a generalised eigenvalue.
  // Constants have grad_D w = 0, giving the function ratio exactly 1; they
  // also give the theta -> 0 limit of the trace ratio.
  const SparseMatrix T = assemble_trace_mass(gd);
  const Eigen::VectorXd one = gd.dofs().restrict_to_free(gd.interpolate([](const Point&) { return 1.0; }));
  const double constants = one.dot(T * one) / one.dot(M * one);
  const double trace = maximise_over_split([&](double theta) {
    return low_rank_eigenvalue(T, split_norm_matrix(G, M, theta));
  });
  return std::max(1.0, std::sqrt(std::max(trace, constants)));
}

Eigen::VectorXd limit_conformity_residual(const GradientDiscretisation& gd,
                                          const VectorFunction& flux,
                                          const ScalarFunction& div_flux) {
  // The residual is a cancellation of two integrals, so it is only as small
  // as their quadrature error: use the high-order rule.
  static const auto rule = triangle_rule<double>(QuadratureKind::Oracle10);
  const DofSpace& dofs = gd.dofs();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dofs.num_free());
  for (const CellReconstruction& c : gd.cells()) {
    Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(c.dofs.size());
    for (const GradientPiece& p : c.pieces) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point x = at(p.region, rule.barycentric[q]);
        const double w = p.area * rule.weights[q];
        local += w * (div_flux(x) * affine_row(x) * c.value + flux(x).transpose() * p.gradient);
      }
    }
    for (std::size_t j = 0; j < c.dofs.size(); ++j) {
      const int fj = dofs.free_index[c.dofs[j]];
      if (fj >= 0) r(fj) += local(j);
    }
  }
  if (gd.bc() == BoundaryCondition::Neumann) {
    const auto gl = gauss_legendre<double>(6);
    for (const TraceReconstruction& tr : gd.traces()) {
      const Face& f = gd.mesh().faces()[tr.face];
      const Cell& owner = gd.mesh().cells()[f.cells[0]];
      Point normal = Point::Zero();
      for (std::size_t i = 0; i < owner.faces.size(); ++i) {
        if (owner.faces[i] == tr.face) normal = owner.normals[i];
      }
      Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(tr.dofs.size());
      for (std::size_t q = 0; q < gl.points.size(); ++q) {
        const Point x = face_point(gd.mesh(), f, gl.points[q]);
        local += f.length * gl.weights[q] * flux(x).dot(normal) * affine_row(x) * tr.value;
      }
      for (std::size_t j = 0; j < tr.dofs.size(); ++j) {
        const int fj = dofs.free_index[tr.dofs[j]];
        if (fj >= 0) r(fj) -= local(j);
      }
    }
  }
  return r;
}

double compute_wd(const GradientDiscretisation& gd, const VectorFunction& flux,
                  const ScalarFunction& div_flux) {
  require_unknowns(gd);
  const Eigen::VectorXd r = limit_conformity_residual(gd, flux, div_flux);
  const SparseMatrix G = assemble_gradient_gram(gd);
  if (gd.bc() == BoundaryCondition::Dirichlet) {
    const Eigen::VectorXd z = refined_solve(G, r).col(0);
    return std::sqrt(std::max(0.0, r.dot(z)));
  }
  const SparseMatrix M = assemble_mass(gd);
  // theta -> 0 keeps only the constant component of r.
  const Eigen::VectorXd one = gd.dofs().restrict_to_free(gd.interpolate([](const Point&) { return 1.0; }));
  const double constants = std::pow(r.dot(one), 2) / one.dot(M * one);
  const double sq = maximise_over_split([&](double theta) {
    const SparseMatrix Q = split_norm_matrix(G, M, theta);
    return r.dot(refined_solve(Q, r).col(0));
  });
  return std::sqrt(std::max({0.0, sq, constants}));
}

Eigen::VectorXd consistency_rhs(const GradientDiscretisation& gd, const ScalarFunction& phi,
                                const VectorFunction& grad_phi) {
  static const auto rule = triangle_rule<double>(QuadratureKind::Gauss7);
  const DofSpace& dofs = gd.dofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs.num_free());
  for (const CellReconstruction& c : gd.cells()) {
    Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(c.dofs.size());
    for (const GradientPiece& p : c.pieces) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point x = at(p.region, rule.barycentric[q]);
        const double w = p.area * rule.weights[q];
        local += w * (phi(x) * affine_row(x) * c.value + grad_phi(x).transpose() * p.gradient);
      }
    }
    for (std::size_t j = 0; j < c.dofs.size(); ++j) {
      const int fj = dofs.free_index[c.dofs[j]];
      if (fj >= 0) b(fj) += local(j);
    }
  }
  if (gd.bc() == BoundaryCondition::Neumann) {
    const auto gl = gauss_legendre<double>(3);
    for (const TraceReconstruction& tr : gd.traces()) {
      const Face& f = gd.mesh().faces()[tr.face];
      Eigen::RowVectorXd local = Eigen::RowVectorXd::Zero(tr.dofs.size());
      for (std::size_t q = 0; q < gl.points.size(); ++q) {
        const Point x = face_point(gd.mesh(), f, gl.points[q]);
        local += f.length * gl.weights[q] * phi(x) * affine_row(x) * tr.value;
      }
      for (std::size_t j = 0; j < tr.dofs.size(); ++j) {
        const int fj = dofs.free_index[tr.dofs[j]];
        if (fj >= 0) b(fj) += local(j);
      }
    }
  }
  return b;
}

ConsistencyBound compute_sd_upper(const GradientDiscretisation& gd, const ScalarFunction& phi,
                                  const VectorFunction& grad_phi) {
  static const auto rule = triangle_rule<double>(QuadratureKind::Gauss7);
  SparseMatrix N = assemble_gradient_gram(gd) + assemble_mass(gd);
  if (gd.bc() == BoundaryCondition::Neumann) N += assemble_trace_mass(gd);
  ConsistencyBound out;
  const Eigen::VectorXd b = consistency_rhs(gd, phi, grad_phi);
  out.minimiser = gd.dofs().num_free() > 0 ? solve_spd(N, b).x : Eigen::VectorXd(0);
  const Eigen::VectorXd w = gd.dofs().expand(out.minimiser);

  double v2 = 0.0, g2 = 0.0, t2 = 0.0;
  for (int k = 0; k < static_cast<int>(gd.cells().size()); ++k) {
    const CellReconstruction& c = gd.cells()[k];
    for (int ip = 0; ip < static_cast<int>(c.pieces.size()); ++ip) {
      const GradientPiece& p = c.pieces[ip];
      const Eigen::Vector2d grad = gd.gradient(k, ip, w);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point x = at(p.region, rule.barycentric[q]);
        const double wq = p.area * rule.weights[q];
        v2 += wq * std::pow(gd.value(k, x, w) - phi(x), 2);
        g2 += wq * (grad - grad_phi(x)).squaredNorm();
      }
    }
  }
  if (gd.bc() == BoundaryCondition::Neumann) {
    const auto gl = gauss_legendre<double>(3);
    for (int s = 0; s < static_cast<int>(gd.traces().size()); ++s) {
      const Face& f = gd.mesh().faces()[gd.traces()[s].face];
      for (std::size_t q = 0; q < gl.points.size(); ++q) {
        const Point x = face_point(gd.mesh(), f, gl.points[q]);
        t2 += f.length * gl.weights[q] * std::pow(gd.trace(s, x, w) - phi(x), 2);
      }
    }
  }
  out.value_error = std::sqrt(v2);
  out.gradient_error = std::sqrt(g2);
  out.trace_error = std::sqrt(t2);
  return out;
}

}  // namespace gdmopt
