// Quadrature rules on triangles and segments.

#ifndef GDMOPT_QUADRATURE_HPP
#define GDMOPT_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gdmopt {

/// Rule on a triangle: barycentric points and weights normalised so that
/// they sum to one (the integral is `area * sum w_i f(x_i)`).
template <typename Scalar>
struct TriangleRule {
  std::string name;
  std::vector<Eigen::Matrix<Scalar, 3, 1>> barycentric;
  std::vector<Scalar> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Rule on [0, 1], weights summing to one.
template <typename Scalar>
struct SegmentRule {
  std::vector<Scalar> points;
  std::vector<Scalar> weights;
};

enum class QuadratureKind { Midpoint, Gauss3, Gauss7, Oracle10 };

/// Gauss-Legendre nodes on [0, 1] by Newton iteration on P_n.
template <typename Scalar>
SegmentRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre needs n >= 1");
  SegmentRule<Scalar> rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < n; ++i) {
    Scalar x = std::cos(pi * (i + Scalar(0.75)) / (n + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    rule.points[n - 1 - i] = (1 + x) / 2;
    rule.weights[n - 1 - i] = 1 / ((1 - x * x) * dp * dp);  // = w_[-1,1] / 2
  }
  return rule;
}

template <typename Scalar = double>
TriangleRule<Scalar> triangle_rule(QuadratureKind kind) {
  using B = Eigen::Matrix<Scalar, 3, 1>;
  TriangleRule<Scalar> r;
  auto add_orbit = [&r](Scalar a, Scalar w) {
    const Scalar b = 1 - 2 * a;
    r.barycentric.push_back(B(b, a, a));
    r.barycentric.push_back(B(a, b, a));
    r.barycentric.push_back(B(a, a, b));
    r.weights.insert(r.weights.end(), 3, w);
  };
  switch (kind) {
    case QuadratureKind::Midpoint:
      r.name = "midpoint";
      r.degree = 1;
      r.barycentric.push_back(B::Constant(Scalar(1) / 3));
      r.weights.push_back(1);
      break;
    case QuadratureKind::Gauss3:
      r.name = "gauss3";
      r.degree = 2;
      add_orbit(Scalar(1) / 6, Scalar(1) / 3);
      break;
    case QuadratureKind::Gauss7: {
      r.name = "gauss7";
      r.degree = 5;
      const Scalar s15 = std::sqrt(Scalar(15));
      r.barycentric.push_back(B::Constant(Scalar(1) / 3));
      r.weights.push_back(Scalar(9) / 40);
      add_orbit((6 - s15) / 21, (155 - s15) / 1200);
      add_orbit((6 + s15) / 21, (155 + s15) / 1200);
      break;
    }
    case QuadratureKind::Oracle10: {
      // Collapsed (Duffy) product of 6-point Gauss-Legendre rules; the
      // Jacobian factor (1 - s) raises the degree in s by one, so total
      // degree 10 is integrated exactly.
      r.name = "gauss-degree-10-oracle";
      r.degree = 10;
      const auto gl = gauss_legendre<Scalar>(6);
      for (std::size_t i = 0; i < gl.points.size(); ++i) {
        for (std::size_t j = 0; j < gl.points.size(); ++j) {
          const Scalar s = gl.points[i];
          const Scalar t = gl.points[j];
          const Scalar x = s;
          const Scalar y = t * (1 - s);
          r.barycentric.push_back(B(1 - x - y, x, y));
          r.weights.push_back(2 * gl.weights[i] * gl.weights[j] * (1 - s));
        }
      }
      break;
    }
  }
  return r;
}

inline QuadratureKind parse_quadrature(std::string_view name) {
  if (name == "midpoint") return QuadratureKind::Midpoint;
  if (name == "gauss3") return QuadratureKind::Gauss3;
  if (name == "gauss7") return QuadratureKind::Gauss7;
  if (name == "gauss-degree-10-oracle") return QuadratureKind::Oracle10;
  throw std::invalid_argument("unknown quadrature rule: " + std::string(name));
}

/// Integral of f over the triangle (a, b, c).
template <typename Scalar, typename F>
Scalar integrate(const TriangleRule<Scalar>& rule, const Eigen::Matrix<Scalar, 2, 1>& a,
                 const Eigen::Matrix<Scalar, 2, 1>& b, const Eigen::Matrix<Scalar, 2, 1>& c,
                 F&& f) {
  const Scalar area =
      std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x()) / 2;
  Scalar sum = 0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& l = rule.barycentric[q];
    sum += rule.weights[q] * f(Eigen::Matrix<Scalar, 2, 1>(l(0) * a + l(1) * b + l(2) * c));
  }
  return area * sum;
}

}  // namespace gdmopt

#endif  // GDMOPT_QUADRATURE_HPP
