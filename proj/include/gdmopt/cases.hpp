// Manufactured test cases with closed-form state, adjoint and control.

#ifndef GDMOPT_CASES_HPP
#define GDMOPT_CASES_HPP

#include <string>
#include <string_view>
#include <vector>

#include "gdmopt/control.hpp"
#include "gdmopt/gradient_discretisation.hpp"

namespace gdmopt {

enum class Domain { UnitSquare, LShape };

struct TestCase {
  std::string name;
  Domain domain = Domain::UnitSquare;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  double c0 = 0.0;
  double alpha = 1.0;
  double lower = -kInfinity;
  double upper = kInfinity;

  ScalarFunction y, p;
  VectorFunction grad_y, grad_p;
  ScalarFunction laplacian_y, laplacian_p;
  ScalarFunction u_d, u;
  ScalarFunction f, y_d;
  ScalarFunction f_b;  // Neumann flux of the state; empty for Dirichlet

  /// Control problem with the case's data, distributed control only.
  OptimalControlProblem problem() const;
};

/// Unit square, y = p = sin(pi x) sin(pi y), u_d = 1 - sin(pi x/2) - sin(pi y/2),
/// alpha = 1, controls in [0, inf).
TestCase example1_dirichlet();

/// L-shaped domain (-1,1)^2 \ [0,1]x[-1,0],
/// y = p = (x^2-1)(y^2-1) r^{2/3} (1 - cos t)(1 + sin t), t in (0, 3pi/2),
/// u_d = 0, alpha = 1e-3, controls in [-600, -50].
TestCase example2_lshape();

/// Unit square with Neumann conditions and c0 = 1,
/// y = p = -(cos(pi x) + cos(pi y)) / pi, u_d = 0, alpha = 1e-3,
/// controls in [-750, -50].
TestCase example3_neumann();

/// "example1", "example2-lshape" or "example3-neumann".
TestCase make_case(std::string_view name);
std::vector<std::string> case_names();

}  // namespace gdmopt

#endif  // GDMOPT_CASES_HPP
