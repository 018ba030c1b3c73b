#include "gdmopt/cases.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gdmopt {

namespace {

constexpr double pi = std::numbers::pi;

// r^{2/3} g(t) on the L-shape, with g(t) = (1 - cos t)(1 + sin t) and the
// angle taken in [0, 2pi) so that the domain is 0 < t < 3pi/2.
struct CornerFactor {
  double value;
  Eigen::Vector2d gradient;
  double laplacian;
};

CornerFactor corner_factor(const Point& x) {
  const double r = x.norm();
  if (r == 0.0) return {0.0, Eigen::Vector2d::Zero(), 0.0};
  double t = std::atan2(x.y(), x.x());
  if (t < 0.0) t += 2.0 * pi;
  const double c = std::cos(t), s = std::sin(t);
  const double g = (1.0 - c) * (1.0 + s);
  const double dg = s + s * s + c - c * c;
  const double d2g = c - s + 4.0 * s * c;
  const double r23 = std::cbrt(r * r);
  CornerFactor out;
  out.value = r23 * g;
  const double dr = (2.0 / 3.0) * g / std::cbrt(r);  // d/dr
  const double dt_over_r = r23 * dg / r;               // (1/r) d/dt
  out.gradient = dr * Eigen::Vector2d(c, s) + dt_over_r * Eigen::Vector2d(-s, c);
  out.laplacian = ((4.0 / 9.0) * g + d2g) / (r23 * r23);
  return out;
}

}  // namespace

OptimalControlProblem TestCase::problem() const {
  OptimalControlProblem pb;
  pb.bc = bc;
  pb.c0 = c0;
  pb.alpha = alpha;
  pb.f = f;
  pb.f_b = f_b;
  pb.y_d = y_d;
  pb.u_d = u_d;
  pb.lower = lower;
  pb.upper = upper;
  return pb;
}

TestCase example1_dirichlet() {
  TestCase tc;
  tc.name = "example1";
  tc.domain = Domain::UnitSquare;
  tc.alpha = 1.0;
  tc.lower = 0.0;
  tc.y = [](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  tc.grad_y = [](const Point& x) {
    return Eigen::Vector2d(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                           pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  tc.laplacian_y = [y = tc.y](const Point& x) { return -2.0 * pi * pi * y(x); };
  tc.p = tc.y;
  tc.grad_p = tc.grad_y;
  tc.laplacian_p = tc.laplacian_y;
  tc.u_d = [](const Point& x) {
    return 1.0 - std::sin(0.5 * pi * x.x()) - std::sin(0.5 * pi * x.y());
  };
  tc.u = [ud = tc.u_d, p = tc.p](const Point& x) { return std::max(ud(x) - p(x), 0.0); };
  tc.f = [ly = tc.laplacian_y, u = tc.u](const Point& x) { return -ly(x) - u(x); };
  tc.y_d = [y = tc.y, lp = tc.laplacian_p](const Point& x) { return y(x) + lp(x); };
  return tc;
}

TestCase example2_lshape() {
  TestCase tc;
  tc.name = "example2-lshape";
  tc.domain = Domain::LShape;
  tc.alpha = 1e-3;
  tc.lower = -600.0;
  tc.upper = -50.0;
  tc.y = [](const Point& x) {
    return (x.x() * x.x() - 1.0) * (x.y() * x.y() - 1.0) * corner_factor(x).value;
  };
  tc.grad_y = [](const Point& x) {
    const double a = x.x() * x.x() - 1.0, b = x.y() * x.y() - 1.0;
    const CornerFactor w = corner_factor(x);
    return Eigen::Vector2d(2.0 * x.x() * b * w.value + a * b * w.gradient.x(),
                           2.0 * x.y() * a * w.value + a * b * w.gradient.y());
  };
  tc.laplacian_y = [](const Point& x) {
    const double a = x.x() * x.x() - 1.0, b = x.y() * x.y() - 1.0;
    const CornerFactor w = corner_factor(x);
    const Eigen::Vector2d grad_ab(2.0 * x.x() * b, 2.0 * x.y() * a);
    return w.value * 2.0 * (a + b) + 2.0 * grad_ab.dot(w.gradient) + a * b * w.laplacian;
  };
  tc.p = tc.y;
  tc.grad_p = tc.grad_y;
  tc.laplacian_p = tc.laplacian_y;
  tc.u_d = [](const Point&) { return 0.0; };
  tc.u = [p = tc.p, alpha = tc.alpha](const Point& x) {
    return project_box(-p(x) / alpha, -600.0, -50.0);
  };
  tc.f = [ly = tc.laplacian_y, u = tc.u](const Point& x) { return -ly(x) - u(x); };
  tc.y_d = [y = tc.y, lp = tc.laplacian_p](const Point& x) { return y(x) + lp(x); };
  return tc;
}

TestCase example3_neumann() {
  TestCase tc;
  tc.name = "example3-neumann";
  tc.domain = Domain::UnitSquare;
  tc.bc = BoundaryCondition::Neumann;
  tc.c0 = 1.0;
  tc.alpha = 1e-3;
  tc.lower = -750.0;
  tc.upper = -50.0;
  tc.y = [](const Point& x) { return -(std::cos(pi * x.x()) + std::cos(pi * x.y())) / pi; };
  tc.grad_y = [](const Point& x) {
    return Eigen::Vector2d(std::sin(pi * x.x()), std::sin(pi * x.y()));
  };
  tc.laplacian_y = [y = tc.y](const Point& x) { return -pi * pi * y(x); };
  tc.p = tc.y;
  tc.grad_p = tc.grad_y;
  tc.laplacian_p = tc.laplacian_y;
  tc.u_d = [](const Point&) { return 0.0; };
  tc.u = [p = tc.p, alpha = tc.alpha](const Point& x) {
    return project_box(-p(x) / alpha, -750.0, -50.0);
  };
  tc.f = [ly = tc.laplacian_y, y = tc.y, u = tc.u](const Point& x) {
    return -ly(x) + y(x) - u(x);
  };
  tc.y_d = [y = tc.y, p = tc.p, lp = tc.laplacian_p](const Point& x) {
    return y(x) + lp(x) - p(x);
  };
  // grad y . n vanishes on every side of the unit square.
  tc.f_b = [](const Point&) { return 0.0; };
  return tc;
}

TestCase make_case(std::string_view name) {
  if (name == "example1") return example1_dirichlet();
  if (name == "example2-lshape") return example2_lshape();
  if (name == "example3-neumann") return example3_neumann();
  throw std::invalid_argument("unknown case '" + std::string(name) + "'");
}

std::vector<std::string> case_names() { return {"example1", "example2-lshape", "example3-neumann"}; }

}  // namespace gdmopt
