// Accuracy measures of a gradient discretisation: the coercivity constant
// C_D, the limit-conformity defect W_D and an upper bound of the
// consistency error S_D.

#ifndef GDMOPT_DIAGNOSTICS_HPP
#define GDMOPT_DIAGNOSTICS_HPP

#include <Eigen/Dense>

#include "gdmopt/assembly.hpp"
#include "gdmopt/gradient_discretisation.hpp"

namespace gdmopt {

enum class EigenMethod { Auto, Dense, PowerIteration };

/// Dirichlet: max ||Pi_D w|| / ||grad_D w||, i.e. the square root of the
/// largest generalised eigenvalue of (mass, gradient Gram).
/// Neumann: max over w of max(||T_D w||, ||Pi_D w||) / (||grad_D w|| + ||Pi_D w||).
/// Auto uses a dense eigensolver below 200 free unknowns and power
/// iteration (relative tolerance 1e-8) above.
double compute_cd(const GradientDiscretisation& gd, EigenMethod method = EigenMethod::Auto);

/// r_i = int (Pi_D phi_i div(flux) + grad_D phi_i . flux) - int_boundary T_D phi_i flux.n
/// over the free basis functions (the boundary term only for Neumann).
Eigen::VectorXd limit_conformity_residual(const GradientDiscretisation& gd,
                                          const VectorFunction& flux,
                                          const ScalarFunction& div_flux);

/// W_D(flux) as the dual norm of the residual: sqrt(r^T G^{-1} r) for
/// Dirichlet; Neumann maximises the same expression over the splitting
/// parameter of ||.||_D.
double compute_wd(const GradientDiscretisation& gd, const VectorFunction& flux,
                  const ScalarFunction& div_flux);

struct ConsistencyBound {
  Eigen::VectorXd minimiser;  // free DOF vector of the least-squares fit
  double value_error = 0.0;   // ||Pi_D w - phi||
  double gradient_error = 0.0;
  double trace_error = 0.0;   // Neumann only
  /// Sum of the three errors at the least-squares minimiser. Satisfies
  /// S_D(phi) <= upper <= sqrt(3) S_D(phi) (sqrt(2) for Dirichlet).
  double upper() const { return value_error + gradient_error + trace_error; }
};

/// Least-squares fit of phi by the reconstructions.
ConsistencyBound compute_sd_upper(const GradientDiscretisation& gd, const ScalarFunction& phi,
                                  const VectorFunction& grad_phi);

/// Right-hand side of the normal equations used by compute_sd_upper.
Eigen::VectorXd consistency_rhs(const GradientDiscretisation& gd, const ScalarFunction& phi,
                                const VectorFunction& grad_phi);

/// Largest eigenvalue of A x = lambda B x, B SPD.
double largest_generalised_eigenvalue(const SparseMatrix& A, const SparseMatrix& B,
                                      EigenMethod method = EigenMethod::Auto);

}  // namespace gdmopt

#endif  // GDMOPT_DIAGNOSTICS_HPP
