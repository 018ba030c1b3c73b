#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gdmopt/analysis.hpp"
#include "gdmopt/schemes.hpp"
#include "gdmopt/study.hpp"
#include "oracles.hpp"

using namespace gdmopt;

namespace {

StudyRow synthetic_row(int level, double h, const std::array<double, kNumErrors>& errors) {
  StudyRow row;
  row.level = level;
  row.report.h = h;
  row.report.dofs = 10 * level;
  row.report.errors = errors;
  row.report.pdas_iterations = level;
  return row;
}

// Smooth data, unbounded controls: y = p = 1 + x + 2 y is affine.
TestCase affine_case(double scale) {
  TestCase tc;
  tc.name = "affine";
  tc.alpha = 1.0;
  tc.y = [scale](const Point& x) { return 1.0 + x.x() / scale + 2.0 * x.y() / scale; };
  tc.p = tc.y;
  tc.grad_y = [scale](const Point&) { return Eigen::Vector2d(1.0 / scale, 2.0 / scale); };
  tc.grad_p = tc.grad_y;
  tc.laplacian_y = [](const Point&) { return 0.0; };
  tc.laplacian_p = tc.laplacian_y;
  tc.u_d = [scale](const Point& x) { return std::cos(x.x() / scale); };
  tc.u = [tc](const Point& x) { return tc.u_d(x) - tc.p(x); };
  tc.f = [tc](const Point& x) { return -tc.u(x); };
  tc.y_d = tc.y;
  return tc;
}

// Wiggly smooth data to make every error nonzero.
TestCase wavy_case(double scale) {
  TestCase tc = affine_case(scale);
  tc.y = [scale](const Point& x) { return std::sin(3.0 * x.x() / scale) * std::exp(x.y() / scale); };
  tc.grad_y = [scale](const Point& x) {
    const double s = std::sin(3.0 * x.x() / scale), c = std::cos(3.0 * x.x() / scale), e = std::exp(x.y() / scale);
    return Eigen::Vector2d(3.0 * c * e / scale, s * e / scale);
  };
  tc.p = tc.y;
  tc.grad_p = tc.grad_y;
  tc.u = [tc](const Point& x) { return tc.u_d(x) - tc.p(x); };
  tc.lower = -0.5;
  tc.upper = 0.5;
  tc.u = [tc](const Point& x) { return std::clamp(tc.u_d(x) - tc.p(x), -0.5, 0.5); };
  return tc;
}

// Discrete "solution": interpolants of the exact state and adjoint,
// cell averages of the control, plus an optional deterministic bump.
KKTSolution interpolated_solution(const GradientDiscretisation& gd, const TestCase& tc, double bump) {
  KKTSolution s;
  s.y = gd.interpolate(tc.y);
  s.p = gd.interpolate(tc.p);
  for (int i = 0; i < s.y.size(); ++i) {
    if (gd.dofs().masked[i]) continue;
    s.y(i) += bump * std::sin(1.0 + i);
    s.p(i) += bump * std::cos(2.0 + i);
  }
  s.u.cells = project_pm(gd.mesh(), tc.u);
  s.iterations = 1;
  return s;
}

PolytopalMesh scaled(const PolytopalMesh& mesh, double factor) {
  std::vector<Point> v = mesh.vertices();
  for (Point& x : v) x *= factor;
  std::vector<std::vector<int>> loops;
  std::vector<Point> points;
  for (const Cell& c : mesh.cells()) {
    loops.push_back(c.vertices);
    points.push_back(c.point * factor);
  }
  return PolytopalMesh::from_cells(std::move(v), std::move(loops), std::move(points));
}

}  // namespace

TEST_CASE("EOC examples") {
  ConvergenceStudy s;
  s.rows.push_back(synthetic_row(1, 0.1, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  s.rows.push_back(synthetic_row(2, 0.05, {0.025, 0.1, 0.3, 0.4, 0.5, 0.6}));
  const auto eoc = compute_eoc(s);
  REQUIRE(eoc.size() == 2);
  for (const auto& e : eoc[0]) CHECK_FALSE(e.has_value());
  CHECK(*eoc[1][kErrY] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(*eoc[1][kErrGradY] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(*eoc[1][kErrP] == 0.0);

  ConvergenceStudy one;
  one.rows.push_back(s.rows[0]);
  CHECK_THROWS_AS(compute_eoc(one), std::invalid_argument);
}

TEST_CASE("EOC of synthetic power laws") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> order(0.5, 3.0), constant(0.1, 10.0);
  ConvergenceStudy s;
  std::array<double, kNumErrors> p{}, c{};
  for (int i = 0; i < kNumErrors; ++i) p[i] = order(rng), c[i] = constant(rng);
  for (int level = 2; level <= 7; ++level) {
    const double h = std::sqrt(2.0) * std::pow(2.0, -level);
    std::array<double, kNumErrors> e{};
    for (int i = 0; i < kNumErrors; ++i) e[i] = c[i] * std::pow(h, p[i]);
    s.rows.push_back(synthetic_row(level, h, e));
  }
  const auto eoc = compute_eoc(s);
  for (std::size_t r = 1; r < eoc.size(); ++r) {
    for (int i = 0; i < kNumErrors; ++i) CHECK(std::abs(*eoc[r][i] - p[i]) <= 1e-12);
  }
}

TEST_CASE("failed rows leave neighbouring EOC cells blank") {
  ConvergenceStudy s;
  for (int level = 2; level <= 5; ++level) {
    s.rows.push_back(synthetic_row(level, std::pow(2.0, -level), {1, 1, 1, 1, 1, 1}));
  }
  s.rows[2].failed = true;
  s.rows[2].report.errors.fill(std::nan(""));
  const auto eoc = compute_eoc(s);
  CHECK(eoc[1][0].has_value());
  CHECK_FALSE(eoc[2][0].has_value());
  CHECK_FALSE(eoc[3][0].has_value());
  std::ostringstream os;
  emit_csv(s, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  for (int r = 0; r < 4; ++r) {
    std::getline(is, line);
    if (r == 2) {
      CHECK(line.find("nan") != std::string::npos);
      CHECK(line.substr(line.size() - 7) == ",failed");
    }
  }
}

TEST_CASE("CSV layout and round trip") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(1e-9, 1.0);
  ConvergenceStudy s;
  for (int level = 2; level <= 4; ++level) {
    std::array<double, kNumErrors> e{};
    for (auto& x : e) x = u(rng);
    s.rows.push_back(synthetic_row(level, std::pow(2.0, -level), e));
  }
  std::ostringstream os;
  emit_csv(s, os);
  const std::string text = os.str();
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  CHECK(line == kStudyCsvHeader);
  int data_rows = 0;
  while (std::getline(lines, line)) {
    ++data_rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 15);
  }
  CHECK(data_rows == 3);
  CHECK(format_number(0.125) == "1.250000000e-01");

  std::istringstream is(text);
  const ConvergenceStudy back = parse_csv(is);
  REQUIRE(back.rows.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(back.rows[r].level == s.rows[r].level);
    CHECK(back.rows[r].report.dofs == s.rows[r].report.dofs);
    CHECK(back.rows[r].report.pdas_iterations == s.rows[r].report.pdas_iterations);
    for (int c = 0; c < kNumErrors; ++c) {
      CHECK(std::abs(back.rows[r].report.errors[c] - s.rows[r].report.errors[c]) <=
            5e-10 * s.rows[r].report.errors[c]);
    }
  }
  // Error columns survive a second pass verbatim; EOCs are recomputed from
  // the rounded errors and may move in the last digit.
  std::ostringstream again;
  emit_csv(back, again);
  std::istringstream a(again.str()), b(text);
  std::string la, lb;
  while (std::getline(a, la) && std::getline(b, lb)) {
    auto prefix = [](const std::string& l) {
      std::size_t pos = 0;
      for (int c = 0; c < 9; ++c) pos = l.find(',', pos) + 1;
      return l.substr(0, pos);
    };
    CHECK(prefix(la) == prefix(lb));
  }

  ConvergenceStudy single;
  single.rows.push_back(s.rows[0]);
  std::ostringstream os1;
  emit_csv(single, os1);
  const std::string single_text = os1.str();
  CHECK(single_text.find(",,,,,,") != std::string::npos);
  CHECK(std::count(single_text.begin(), single_text.end(), '\n') == 2);

  std::istringstream bad("level,h\n1,2\n");
  CHECK_THROWS(parse_csv(bad));
  CHECK_THROWS(emit_csv(s, std::string("/nonexistent-dir/x.csv")));
}

TEST_CASE("interpolated exact solutions have zero state errors") {
  const TestCase tc = affine_case(1.0);
  SUBCASE("conforming P1 reproduces affine functions") {
    const auto gd = make_conforming_p1(oracle::share(build_unit_square_triangulation(4)), BoundaryCondition::Neumann);
    const ErrorReport r = compute_errors(gd, interpolated_solution(gd, tc, 0.0), tc);
    CHECK(r.errors[kErrY] <= 1e-14);
    CHECK(r.errors[kErrGradY] <= 1e-14);
    CHECK(r.errors[kErrP] <= 1e-14);
    CHECK(r.errors[kErrGradP] <= 1e-14);
    CHECK(r.dofs == 25);
  }
  SUBCASE("HMM samples at cell points") {
    const TestCase wavy = wavy_case(1.0);
    const auto gd = make_hmm(oracle::share(build_cartesian_mesh(4, 0.3)), BoundaryCondition::Neumann);
    const ErrorReport r = compute_errors(gd, interpolated_solution(gd, wavy, 0.0), wavy);
    CHECK(r.errors[kErrY] == 0.0);
    CHECK(r.errors[kErrP] == 0.0);
    CHECK(r.errors[kErrGradY] > 0.0);
  }
  TestCase broken = tc;
  broken.grad_y = nullptr;
  const auto gd = make_hmm(oracle::share(build_cartesian_mesh(2)), BoundaryCondition::Neumann);
  CHECK_THROWS_AS(compute_errors(gd, interpolated_solution(gd, tc, 0.0), broken), std::invalid_argument);
}

TEST_CASE("relative errors do not depend on the length unit") {
  for (SchemeKind s : {SchemeKind::ConformingP1, SchemeKind::NonConformingP1, SchemeKind::HMM}) {
    const PolytopalMesh base = build_unit_square_triangulation(4);
    const auto gd1 = make_scheme(s, oracle::share(base), BoundaryCondition::Dirichlet);
    const auto gd2 = make_scheme(s, oracle::share(scaled(base, 2.0)), BoundaryCondition::Dirichlet);
    const TestCase tc1 = wavy_case(1.0), tc2 = wavy_case(2.0);
    const KKTSolution s1 = interpolated_solution(gd1, tc1, 0.01);
    KKTSolution s2 = s1;
    s2.u.cells = project_pm(gd2.mesh(), tc2.u);
    const ErrorReport r1 = compute_errors(gd1, s1, tc1), r2 = compute_errors(gd2, s2, tc2);
    CAPTURE(scheme_name(s));
    CHECK(r2.h == 2.0 * r1.h);
    for (int c = 0; c < kNumErrors; ++c) {
      CAPTURE(c);
      CHECK(r1.errors[c] > 0.0);
      CHECK(std::abs(r1.errors[c] - r2.errors[c]) <= 1e-13 * r1.errors[c]);
    }
  }
}

TEST_CASE("study on example 1 with conforming P1") {
  RunConfig cfg;
  cfg.case_name = "example1";
  cfg.scheme = SchemeKind::ConformingP1;
  cfg.min_level = 2;
  cfg.max_level = 5;
  const StudyResult res = run_study(cfg);
  REQUIRE(res.ok());
  REQUIRE(res.study.rows.size() == 4);
  for (std::size_t r = 1; r < res.study.rows.size(); ++r) {
    CHECK(res.study.rows[r].report.h < res.study.rows[r - 1].report.h);
    for (int c = 0; c < kNumErrors; ++c) {
      CHECK(res.study.rows[r].report.errors[c] < res.study.rows[r - 1].report.errors[c]);
    }
  }
}

TEST_CASE("study failures are marked per level") {
  RunConfig cfg;
  cfg.case_name = "example3-neumann";
  cfg.min_level = 2;
  cfg.max_level = 3;
  cfg.pdas.max_iter = 1;
  const StudyResult res = run_study(cfg);
  CHECK_FALSE(res.ok());
  REQUIRE(res.study.rows.size() == 2);
  for (const StudyRow& row : res.study.rows) {
    CHECK(row.failed);
    CHECK(std::isnan(row.report.errors[kErrY]));
  }
  CHECK(res.failures[0].rfind("level 2:", 0) == 0);
}

TEST_CASE("run configuration validation") {
  RunConfig cfg;
  cfg.min_level = 4;
  cfg.max_level = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.shift = 0.3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.scheme = SchemeKind::HMM;
  CHECK_NOTHROW(cfg.validate());
  cfg.case_name = "example2-lshape";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.case_name = "nope";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("level meshes") {
  const TestCase e1 = example1_dirichlet();
  CHECK(build_level_mesh(e1, SchemeKind::HMM, 3).shape() == CellShape::Triangles);
  const PolytopalMesh cart = build_level_mesh(e1, SchemeKind::HMM, 3, 0.3);
  CHECK(cart.shape() == CellShape::Quadrilaterals);
  CHECK(cart.num_cells() == 64);
  CHECK(build_level_mesh(example2_lshape(), SchemeKind::ConformingP1, 2).total_area() == doctest::Approx(3.0));
}

TEST_CASE("diagnostics per level") {
  RunConfig cfg;
  cfg.case_name = "example1";
  cfg.scheme = SchemeKind::ConformingP1;
  cfg.min_level = 2;
  cfg.max_level = 5;
  const DiagnosticsResult d = diagnose(cfg);
  REQUIRE(d.ok());
  REQUIRE(d.rows.size() == 4);
  for (const DiagnosticsRow& r : d.rows) CHECK(r.w_d_y <= 1e-10);
  for (std::size_t i = 2; i < d.rows.size(); ++i) {
    // C_D settles from level 3 on; level 2 has a single ring of unknowns.
    CHECK(std::abs(d.rows[i].c_d / d.rows[1].c_d - 1.0) <= 0.1);
  }
  for (std::size_t i = 1; i < d.rows.size(); ++i) {
    const double eoc = std::log(d.rows[i - 1].s_d_y / d.rows[i].s_d_y) / std::log(d.rows[i - 1].h / d.rows[i].h);
    CHECK(eoc == doctest::Approx(1.0).epsilon(0.15));
  }
  std::ostringstream os;
  emit_diagnostics_csv(d.rows, os);
  CHECK(os.str().rfind(std::string(kDiagnosticsCsvHeader) + "\n", 0) == 0);
}
