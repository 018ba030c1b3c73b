// Assembly of the gradient-scheme bilinear forms and loads on the free
// unknowns, and the SPD solves behind the base elliptic problem.

#ifndef GDMOPT_ASSEMBLY_HPP
#define GDMOPT_ASSEMBLY_HPP

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gdmopt/gradient_discretisation.hpp"

namespace gdmopt {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// A(x) = Identity.
Eigen::Matrix2d identity_tensor(const Point&);

/// int A grad_D u . grad_D w, A sampled at the centroid of each piece.
SparseMatrix assemble_gradient_gram(const GradientDiscretisation& gd,
                                    const TensorFunction& A = identity_tensor);

/// int Pi_D u Pi_D w.
SparseMatrix assemble_mass(const GradientDiscretisation& gd);

/// int_{boundary} T_D u T_D w (Neumann only).
SparseMatrix assemble_trace_mass(const GradientDiscretisation& gd);

/// a_D = gradient Gram + c0 mass. Neumann requires c0 > 0.
SparseMatrix assemble_stiffness(const GradientDiscretisation& gd,
                                const TensorFunction& A = identity_tensor, double c0 = 0.0);

/// Columns: cells. Entry (i, K) = int_K Pi_D phi_i.
SparseMatrix assemble_cell_coupling(const GradientDiscretisation& gd);

/// Columns: boundary faces in gd.traces() order. Entry (i, s) = int_s T_D phi_i.
SparseMatrix assemble_boundary_coupling(const GradientDiscretisation& gd);

/// (F, Pi_D w) + (G, T_D w)_boundary on the free unknowns. The boundary
/// term is only accepted for Neumann discretisations.
Eigen::VectorXd assemble_load(const GradientDiscretisation& gd, const ScalarFunction& F,
                              const ScalarFunction& G = nullptr);

/// Thrown by solve_spd on a non-SPD or singular matrix.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpdSolveResult {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
};

/// Sparse Cholesky (LDL^T) with iterative refinement to a relative residual
/// of 1e-12.
SpdSolveResult solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b);

/// Gradient-scheme solution of -div(A grad psi) (+ c0 psi) = F with the
/// discretisation's boundary condition (Neumann flux G). Full DOF vector.
Eigen::VectorXd solve_pde(const GradientDiscretisation& gd, const ScalarFunction& F,
                          const ScalarFunction& G = nullptr,
                          const TensorFunction& A = identity_tensor, double c0 = 0.0);

}  // namespace gdmopt

#endif  // GDMOPT_ASSEMBLY_HPP
