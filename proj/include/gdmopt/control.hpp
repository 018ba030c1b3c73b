// Discrete optimality system of the box-constrained control problem:
// primal-dual active-set solver, a dense projected-gradient reference
// solver for small problems, and post-processed controls.

#ifndef GDMOPT_CONTROL_HPP
#define GDMOPT_CONTROL_HPP

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gdmopt/assembly.hpp"
#include "gdmopt/gradient_discretisation.hpp"
#include "gdmopt/quadrature.hpp"

namespace gdmopt {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// P_[a,b](s) = min(b, max(a, s)).
template <typename Scalar>
Scalar project_box(Scalar s, Scalar a, Scalar b) {
  if (a > b) throw std::invalid_argument("project_box: lower bound above upper bound");
  return std::min(b, std::max(a, s));
}

/// Cell averages (P_M g)_K computed with the given rule on the cell's
/// sub-triangles.
Eigen::VectorXd project_pm(const PolytopalMesh& mesh, const ScalarFunction& g,
                           QuadratureKind rule = QuadratureKind::Gauss7);

struct OptimalControlProblem {
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  double c0 = 0.0;  // reaction, Neumann only
  TensorFunction diffusion = identity_tensor;
  double alpha = 1.0;
  double beta = 1.0;  // boundary control weight
  ScalarFunction f;            // distributed source
  ScalarFunction f_b;          // Neumann flux source
  ScalarFunction y_d;          // desired state
  ScalarFunction u_d;          // desired control; empty means 0
  double lower = -kInfinity;   // distributed control bounds
  double upper = kInfinity;
  bool distributed_control = true;
  bool boundary_control = false;  // Neumann only
  double boundary_lower = -kInfinity;
  double boundary_upper = kInfinity;

  void validate() const;
};

/// Piecewise-constant controls: one value per cell and, for boundary
/// control, one per boundary face (in GradientDiscretisation::traces() order).
struct ControlVector {
  Eigen::VectorXd cells;
  Eigen::VectorXd boundary;
};

enum class ActiveState : signed char { Inactive = 0, Lower = 1, Upper = 2 };

struct KKTSolution {
  Eigen::VectorXd y;  // full DOF vectors
  Eigen::VectorXd p;
  ControlVector u;
  int iterations = 0;
  std::vector<ActiveState> active;           // per cell
  std::vector<ActiveState> boundary_active;  // per boundary face
};

struct PdasConfig {
  int max_iter = 100;
  double tol = 1e-10;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, KKTSolution last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  KKTSolution last_iterate;
};

/// Primal-dual active-set iteration. Each step fixes the controls on the
/// current active sets, eliminates the inactive ones through
/// u = P_M(u_d) - alpha^{-1} P_M(Pi_D p) and solves the coupled
/// state/adjoint system; it stops when the active sets repeat.
KKTSolution solve_kkt_pdas(const OptimalControlProblem& problem, const GradientDiscretisation& gd,
                           const PdasConfig& config = {});

/// Accelerated projected gradient on the reduced discrete cost with a
/// dense control-to-state map. Limited to 500 free unknowns.
KKTSolution solve_kkt_reference(const OptimalControlProblem& problem,
                                const GradientDiscretisation& gd);

/// (Pi_D p + alpha (u - u_d), v - u) + beta (T_D p / beta + u_b, v_b - u_b)_boundary.
double variational_inequality(const OptimalControlProblem& problem,
                              const GradientDiscretisation& gd, const KKTSolution& solution,
                              const ControlVector& v);

/// max over controls of |u - P_[a,b](P_M u_d - alpha^{-1} P_M Pi_D p)|.
double projection_identity_defect(const OptimalControlProblem& problem,
                                  const GradientDiscretisation& gd, const KKTSolution& solution);

/// Residuals of the discrete state and adjoint equations, relative to the
/// norm of their right-hand sides.
struct KktResiduals {
  double state = 0.0;
  double adjoint = 0.0;
};
KktResiduals kkt_residuals(const OptimalControlProblem& problem, const GradientDiscretisation& gd,
                           const KKTSolution& solution);

/// Post-processed controls. Piecewise-linear reconstructions use
///   u~ = P(P_M u_d - p / alpha),   u~_h = P(P_M u_d - Pi_D p_D / alpha);
/// piecewise-constant ones use p(xbar_K) and (p_D)_K cellwise.
class PostprocessedControls {
 public:
  PostprocessedControls(const OptimalControlProblem& problem, const GradientDiscretisation& gd,
                        const KKTSolution& solution, ScalarFunction exact_adjoint);

  bool cellwise() const { return cellwise_; }
  double continuous(int cell, const Point& x) const;  // u~
  double discrete(int cell, const Point& x) const;    // u~_h
  const Eigen::VectorXd& desired_average() const { return desired_; }

 private:
  const GradientDiscretisation* gd_;
  Eigen::VectorXd p_;
  ScalarFunction exact_adjoint_;
  Eigen::VectorXd desired_;
  double alpha_, lower_, upper_;
  bool cellwise_;
};

}  // namespace gdmopt

#endif  // GDMOPT_CONTROL_HPP
