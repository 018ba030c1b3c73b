#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gdmopt/assembly.hpp"
#include "gdmopt/diagnostics.hpp"
#include "gdmopt/schemes.hpp"
#include "oracles.hpp"

using namespace gdmopt;

namespace {

constexpr double pi = std::numbers::pi;
const SchemeKind kSchemes[] = {SchemeKind::ConformingP1, SchemeKind::NonConformingP1, SchemeKind::HMM};

PolytopalMesh mesh_for(SchemeKind, int m) { return build_unit_square_triangulation(m); }

GradientDiscretisation make(SchemeKind s, int m, BoundaryCondition bc) {
  return make_scheme(s, oracle::share(mesh_for(s, m)), bc);
}

Point random_point_in(const Triangle& t, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double a = u(rng), b = u(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return t[0] + a * (t[1] - t[0]) + b * (t[2] - t[0]);
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double sd_oracle(const GradientDiscretisation& gd, const ScalarFunction& phi,
                 const VectorFunction& grad) {
  // Normal equations of the least-squares fit, assembled from point values.
  const oracle::Basis basis(gd);
  const int n = basis.size();
  Eigen::MatrixXd N = oracle::mass(gd) + oracle::gram(gd);
  if (gd.bc() == BoundaryCondition::Neumann) N += oracle::trace_mass(gd);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  oracle::for_each_point(gd, QuadratureKind::Gauss7, [&](int k, int ip, const Point& x, double w) {
    for (int i = 0; i < n; ++i) {
      b(i) += w * (phi(x) * gd.value(k, x, basis.full[i]) + grad(x).dot(gd.gradient(k, ip, basis.full[i])));
    }
  });
  const auto gl = gauss_legendre<double>(3);
  for (int s = 0; s < static_cast<int>(gd.traces().size()); ++s) {
    const Face& f = gd.mesh().faces()[gd.traces()[s].face];
    const Point a = gd.mesh().vertices()[f.vertices[0]], c = gd.mesh().vertices()[f.vertices[1]];
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const Point x = a + gl.points[q] * (c - a);
      for (int i = 0; i < n; ++i) b(i) += f.length * gl.weights[q] * phi(x) * gd.trace(s, x, basis.full[i]);
    }
  }
  const Eigen::VectorXd w = gd.dofs().expand(N.ldlt().solve(b));
  double v2 = 0, g2 = 0, t2 = 0;
  oracle::for_each_point(gd, QuadratureKind::Gauss7, [&](int k, int ip, const Point& x, double wq) {
    v2 += wq * std::pow(gd.value(k, x, w) - phi(x), 2);
    g2 += wq * (gd.gradient(k, ip, w) - grad(x)).squaredNorm();
  });
  for (int s = 0; s < static_cast<int>(gd.traces().size()); ++s) {
    const Face& f = gd.mesh().faces()[gd.traces()[s].face];
    const Point a = gd.mesh().vertices()[f.vertices[0]], c = gd.mesh().vertices()[f.vertices[1]];
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const Point x = a + gl.points[q] * (c - a);
      t2 += f.length * gl.weights[q] * std::pow(gd.trace(s, x, w) - phi(x), 2);
    }
  }
  return std::sqrt(v2) + std::sqrt(g2) + std::sqrt(t2);
}

const ScalarFunction bubble = [](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
const VectorFunction bubble_grad = [](const Point& x) {
  return Eigen::Vector2d(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                         pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
};

}  // namespace

TEST_CASE("interpolating zero gives the zero vector") {
  for (SchemeKind s : kSchemes) {
    for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
      const GradientDiscretisation gd = make(s, 3, bc);
      CHECK(gd.interpolate([](const Point&) { return 0.0; }).norm() == 0.0);
    }
  }
}

TEST_CASE("reconstructions are linear in the unknowns") {
  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  for (SchemeKind s : kSchemes) {
    for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
      const GradientDiscretisation gd = make(s, 3, bc);
      const int n = gd.dofs().size();
      for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd v(n), w(n);
        for (int i = 0; i < n; ++i) {
          v(i) = n01(rng);
          w(i) = n01(rng);
        }
        const double a = n01(rng), b = n01(rng);
        const Eigen::VectorXd z = a * v + b * w;
        std::uniform_int_distribution<int> pick(0, gd.mesh().num_cells() - 1);
        const int k = pick(rng);
        const auto& pieces = gd.cells()[k].pieces;
        for (int ip = 0; ip < static_cast<int>(pieces.size()); ++ip) {
          const Point x = random_point_in(pieces[ip].region, rng);
          CHECK(std::abs(gd.value(k, x, z) - a * gd.value(k, x, v) - b * gd.value(k, x, w)) <= 1e-12);
          CHECK((gd.gradient(k, ip, z) - a * gd.gradient(k, ip, v) - b * gd.gradient(k, ip, w)).norm() <=
                1e-12 * (1.0 + gd.gradient(k, ip, z).norm()));
        }
        for (int t = 0; t < static_cast<int>(gd.traces().size()); ++t) {
          const Point x = gd.mesh().faces()[gd.traces()[t].face].midpoint;
          CHECK(std::abs(gd.trace(t, x, z) - a * gd.trace(t, x, v) - b * gd.trace(t, x, w)) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("gradient norm and Neumann norm are definite") {
  for (SchemeKind s : kSchemes) {
    for (int m : {2, 3, 4}) {
      const GradientDiscretisation d = make(s, m, BoundaryCondition::Dirichlet);
      const Eigen::MatrixXd G = Eigen::MatrixXd(assemble_gradient_gram(d));
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff() > 1e-10);
      const GradientDiscretisation nm = make(s, m, BoundaryCondition::Neumann);
      const Eigen::MatrixXd N = Eigen::MatrixXd(assemble_gradient_gram(nm) + assemble_mass(nm));
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(N).eigenvalues().minCoeff() > 1e-10);
      CHECK(nm.dofs().num_free() == nm.dofs().size());
    }
  }
}

TEST_CASE("pieces tile each cell") {
  for (SchemeKind s : kSchemes) {
    const GradientDiscretisation gd = make(s, 3, BoundaryCondition::Dirichlet);
    for (int k = 0; k < gd.mesh().num_cells(); ++k) {
      double area = 0.0;
      for (const GradientPiece& p : gd.cells()[k].pieces) area += p.area;
      CHECK(area == doctest::Approx(gd.mesh().cells()[k].area).epsilon(1e-13));
    }
  }
}

TEST_CASE("C_D matches the dense oracle") {
  for (SchemeKind s : kSchemes) {
    for (int m : {2, 3}) {
      const GradientDiscretisation gd = make(s, m, BoundaryCondition::Dirichlet);
      if (gd.dofs().num_free() == 0 || gd.dofs().num_free() > 50) continue;
      const double expected = std::sqrt(oracle::max_generalised_eigenvalue(oracle::mass(gd), oracle::gram(gd)));
      CAPTURE(scheme_name(s));
      CHECK(relative_gap(compute_cd(gd, EigenMethod::Dense), expected) <= 1e-8);
      CHECK(relative_gap(compute_cd(gd, EigenMethod::PowerIteration), expected) <= 1e-8);
    }
  }
}

TEST_CASE("Neumann C_D matches the scanned oracle") {
  for (SchemeKind s : kSchemes) {
    const GradientDiscretisation gd = make(s, 2, BoundaryCondition::Neumann);
    REQUIRE(gd.dofs().num_free() <= 50);
    const Eigen::MatrixXd M = oracle::mass(gd), G = oracle::gram(gd), T = oracle::trace_mass(gd);
    const double trace = oracle::scan_max([&](double th) {
      return oracle::max_generalised_eigenvalue(T, G / th + M / (1.0 - th));
    });
    // theta -> 0 confines w to the kernel of the gradient, the constants.
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(M.rows());
    const double limit = one.dot(T * one) / one.dot(M * one);
    const double expected = std::max(1.0, std::sqrt(std::max(trace, limit)));
    CAPTURE(scheme_name(s));
    CHECK(relative_gap(compute_cd(gd), expected) <= 1e-8);
    // Constants give ||T w|| / ||Pi w|| = sqrt(|boundary| / |domain|) = 2.
    CHECK(compute_cd(gd) >= 2.0 - 1e-12);
  }
}

TEST_CASE("C_D does not depend on the basis") {
  const GradientDiscretisation gd = make(SchemeKind::HMM, 2, BoundaryCondition::Dirichlet);
  const Eigen::MatrixXd M = oracle::mass(gd), G = oracle::gram(gd);
  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd T(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < T.size(); ++i) T.data()[i] = n01(rng);
  T += 5.0 * Eigen::MatrixXd::Identity(T.rows(), T.cols());
  const double a = oracle::max_generalised_eigenvalue(M, G);
  const double b = oracle::max_generalised_eigenvalue(T.transpose() * M * T, T.transpose() * G * T);
  CHECK(relative_gap(a, b) <= 1e-8);
}

TEST_CASE("C_D on a mesh without free unknowns is an error") {
  const GradientDiscretisation gd = make(SchemeKind::ConformingP1, 1, BoundaryCondition::Dirichlet);
  CHECK(gd.dofs().num_free() == 0);
  CHECK_THROWS_AS(compute_cd(gd), std::invalid_argument);
}

TEST_CASE("C_D stays bounded under refinement") {
  for (SchemeKind s : kSchemes) {
    for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
      std::vector<double> values;
      for (int m : {4, 8, 16, 32}) values.push_back(compute_cd(make(s, m, bc)));
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      CAPTURE(scheme_name(s));
      CAPTURE(static_cast<int>(bc));
      CHECK(*hi / *lo <= 1.10);
    }
  }
}

TEST_CASE("W_D vanishes for conforming P1") {
  // Polynomial fluxes: the 7-point rule integrates the residual exactly.
  const VectorFunction flux = [](const Point& x) { return Eigen::Vector2d(x.x() * x.y() + 1.0, x.y() * x.y() - x.x()); };
  const ScalarFunction div = [](const Point& x) { return x.y() + 2.0 * x.y(); };
  for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
    for (int m : {2, 4, 8}) {
      CHECK(compute_wd(make(SchemeKind::ConformingP1, m, bc), flux, div) <= 1e-10);
    }
  }
  // Constant flux: the divergence term vanishes and the gradients integrate to zero.
  const VectorFunction c = [](const Point&) { return Eigen::Vector2d(0.3, -1.2); };
  const ScalarFunction zero = [](const Point&) { return 0.0; };
  CHECK(compute_wd(make(SchemeKind::ConformingP1, 4, BoundaryCondition::Dirichlet), c, zero) <= 1e-12);
}

TEST_CASE("W_D matches the dense oracle") {
  const VectorFunction flux = bubble_grad;
  const ScalarFunction div = [](const Point& x) { return -2.0 * pi * pi * bubble(x); };
  for (SchemeKind s : kSchemes) {
    const GradientDiscretisation gd = make(s, 2, BoundaryCondition::Dirichlet);
    const oracle::Basis basis(gd);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(basis.size());
    oracle::for_each_point(gd, QuadratureKind::Oracle10, [&](int k, int ip, const Point& x, double w) {
      for (int i = 0; i < basis.size(); ++i) {
        r(i) += w * (div(x) * gd.value(k, x, basis.full[i]) + flux(x).dot(gd.gradient(k, ip, basis.full[i])));
      }
    });
    const double expected = std::sqrt(r.dot(oracle::gram(gd).ldlt().solve(r)));
    CAPTURE(scheme_name(s));
    CHECK(std::abs(compute_wd(gd, flux, div) - expected) <= 1e-8 * std::max(1.0, expected));
  }
}

TEST_CASE("W_D decays linearly for the non-conforming schemes") {
  const ScalarFunction div = [](const Point& x) { return -2.0 * pi * pi * bubble(x); };
  for (SchemeKind s : {SchemeKind::NonConformingP1, SchemeKind::HMM}) {
    const double w8 = compute_wd(make(s, 8, BoundaryCondition::Dirichlet), bubble_grad, div);
    const double w16 = compute_wd(make(s, 16, BoundaryCondition::Dirichlet), bubble_grad, div);
    const double w32 = compute_wd(make(s, 32, BoundaryCondition::Dirichlet), bubble_grad, div);
    CAPTURE(scheme_name(s));
    CHECK(std::log2(w8 / w16) >= 0.85);
    CHECK(std::log2(w16 / w32) >= 0.85);
  }
}

TEST_CASE("S_D upper bound") {
  SUBCASE("zero function") {
    for (SchemeKind s : kSchemes) {
      const auto zero = [](const Point&) { return 0.0; };
      const auto zero_grad = [](const Point&) { return Eigen::Vector2d(0.0, 0.0); };
      CHECK(compute_sd_upper(make(s, 3, BoundaryCondition::Dirichlet), zero, zero_grad).upper() == 0.0);
    }
  }
  SUBCASE("representable function") {
    // x + 2y - 1 is reproduced exactly by every scheme in the Neumann space.
    const auto phi = [](const Point& x) { return x.x() + 2.0 * x.y() - 1.0; };
    const auto grad = [](const Point&) { return Eigen::Vector2d(1.0, 2.0); };
    for (SchemeKind s : {SchemeKind::ConformingP1, SchemeKind::NonConformingP1}) {
      CHECK(compute_sd_upper(make(s, 4, BoundaryCondition::Neumann), phi, grad).upper() <= 1e-10);
    }
    // A P1 function from the Dirichlet space.
    const GradientDiscretisation gd = make(SchemeKind::ConformingP1, 4, BoundaryCondition::Dirichlet);
    std::mt19937 rng(9);
    std::normal_distribution<double> n01;
    Eigen::VectorXd v(gd.dofs().num_free());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n01(rng);
    const Eigen::VectorXd full = gd.dofs().expand(v);
    const auto& mesh = gd.mesh();
    auto locate = [&mesh](const Point& x) {
      for (int k = 0; k < mesh.num_cells(); ++k) {
        const auto& c = mesh.cells()[k];
        bool inside = true;
        for (std::size_t i = 0; i < c.faces.size(); ++i) {
          inside = inside && (x - mesh.faces()[c.faces[i]].midpoint).dot(c.normals[i]) <= 1e-12;
        }
        if (inside) return k;
      }
      return -1;
    };
    const ScalarFunction pw = [&](const Point& x) { return gd.value(locate(x), x, full); };
    const VectorFunction pw_grad = [&](const Point& x) { return gd.gradient(locate(x), 0, full); };
    const ConsistencyBound b = compute_sd_upper(gd, pw, pw_grad);
    CHECK(b.upper() <= 1e-10);
    CHECK((b.minimiser - v).norm() <= 1e-10);
  }
  SUBCASE("dense oracle") {
    for (SchemeKind s : kSchemes) {
      for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
        const GradientDiscretisation gd = make(s, 2, bc);
        CAPTURE(scheme_name(s));
        CHECK(relative_gap(compute_sd_upper(gd, bubble, bubble_grad).upper(),
                           sd_oracle(gd, bubble, bubble_grad)) <= 1e-8);
      }
    }
  }
  SUBCASE("linear decay for a smooth function") {
    for (SchemeKind s : kSchemes) {
      const double a = compute_sd_upper(make(s, 8, BoundaryCondition::Dirichlet), bubble, bubble_grad).upper();
      const double b = compute_sd_upper(make(s, 16, BoundaryCondition::Dirichlet), bubble, bubble_grad).upper();
      const double c = compute_sd_upper(make(s, 32, BoundaryCondition::Dirichlet), bubble, bubble_grad).upper();
      CAPTURE(scheme_name(s));
      CHECK(std::log2(a / b) == doctest::Approx(1.0).epsilon(0.15));
      CHECK(std::log2(b / c) == doctest::Approx(1.0).epsilon(0.15));
    }
  }
}

TEST_CASE("power iteration agrees with the dense eigensolver") {
  const GradientDiscretisation gd = make(SchemeKind::NonConformingP1, 8, BoundaryCondition::Dirichlet);
  const SparseMatrix M = assemble_mass(gd), G = assemble_gradient_gram(gd);
  const double dense = largest_generalised_eigenvalue(M, G, EigenMethod::Dense);
  const double power = largest_generalised_eigenvalue(M, G, EigenMethod::PowerIteration);
  CHECK(relative_gap(power, dense) <= 1e-8);
}
