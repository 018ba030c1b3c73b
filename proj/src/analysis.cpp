#include "gdmopt/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gdmopt/quadrature.hpp"

namespace gdmopt {

namespace {

Point at(const Triangle& t, const Eigen::Vector3d& l) {
  return l(0) * t[0] + l(1) * t[1] + l(2) * t[2];
}

Point centre(const Triangle& t) { return (t[0] + t[1] + t[2]) / 3.0; }

double triangle_area(const Triangle& t) {
  const Point a = t[1] - t[0], b = t[2] - t[0];
  return 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
}

double ratio(double num2, double den2) { return std::sqrt(num2) / std::sqrt(den2); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ErrorReport compute_errors(const GradientDiscretisation& gd, const KKTSolution& solution,
                           const TestCase& tc) {
  if (!tc.y || !tc.p || !tc.grad_y || !tc.grad_p || !tc.u) {
    throw std::invalid_argument("compute_errors needs exact values and gradients");
  }
  const auto g7 = triangle_rule<double>(QuadratureKind::Gauss7);
  const auto g3 = triangle_rule<double>(QuadratureKind::Gauss3);
  const PolytopalMesh& mesh = gd.mesh();
  const bool cellwise = gd.policy() == ProjectionPolicy::CellPointSampling;
  const PostprocessedControls post(tc.problem(), gd, solution, tc.p);

  double ey = 0, ny = 0, ep = 0, np = 0;      // L2 of y, p
  double egy = 0, ngy = 0, egp = 0, ngp = 0;  // energy
  double eu = 0, nu = 0, eut = 0;

  for (int k = 0; k < mesh.num_cells(); ++k) {
    const Cell& cell = mesh.cells()[k];
    const CellReconstruction& rec = gd.cells()[k];

    for (int ip = 0; ip < static_cast<int>(rec.pieces.size()); ++ip) {
      const GradientPiece& piece = rec.pieces[ip];
      const Point xc = centre(piece.region);
      const Eigen::Vector2d gy = tc.grad_y(xc), gp = tc.grad_p(xc);
      egy += piece.area * (gd.gradient(k, ip, solution.y) - gy).squaredNorm();
      ngy += piece.area * gy.squaredNorm();
      egp += piece.area * (gd.gradient(k, ip, solution.p) - gp).squaredNorm();
      ngp += piece.area * gp.squaredNorm();
    }

    if (cellwise) {
      const double yk = tc.y(cell.point), pk = tc.p(cell.point);
      ey += cell.area * std::pow(gd.value(k, cell.point, solution.y) - yk, 2);
      ny += cell.area * yk * yk;
      ep += cell.area * std::pow(gd.value(k, cell.point, solution.p) - pk, 2);
      np += cell.area * pk * pk;
      eut += cell.area * std::pow(post.discrete(k, cell.centroid) - post.continuous(k, cell.centroid), 2);
    } else {
      for (const GradientPiece& piece : rec.pieces) {
        for (std::size_t q = 0; q < g7.size(); ++q) {
          const Point x = at(piece.region, g7.barycentric[q]);
          const double w = piece.area * g7.weights[q];
          const double yx = tc.y(x), px = tc.p(x);
          ey += w * std::pow(gd.value(k, x, solution.y) - yx, 2);
          ny += w * yx * yx;
          ep += w * std::pow(gd.value(k, x, solution.p) - px, 2);
          np += w * px * px;
          eut += w * std::pow(post.discrete(k, x) - post.continuous(k, x), 2);
        }
      }
    }

    const double uk = solution.u.cells(k);
    for (const Triangle& t : mesh.cell_triangles(k)) {
      const double a = triangle_area(t);
      for (std::size_t q = 0; q < g3.size(); ++q) {
        const double ux = tc.u(at(t, g3.barycentric[q]));
        eu += a * g3.weights[q] * (uk - ux) * (uk - ux);
        nu += a * g3.weights[q] * ux * ux;
      }
    }
  }

  ErrorReport r;
  r.h = mesh.h();
  r.dofs = gd.dofs().num_free();
  r.pdas_iterations = solution.iterations;
  r.errors[kErrY] = ratio(ey, ny);
  r.errors[kErrGradY] = ratio(egy, ngy);
  r.errors[kErrP] = ratio(ep, np);
  r.errors[kErrGradP] = ratio(egp, ngp);
  r.errors[kErrU] = ratio(eu, nu);
  r.errors[kErrUTilde] = ratio(eut, nu);
  return r;
}

std::vector<EocRow> compute_eoc(const ConvergenceStudy& study) {
  if (study.rows.size() < 2) throw std::invalid_argument("EOC needs at least two levels");
  std::vector<EocRow> out(study.rows.size());
  for (std::size_t i = 1; i < study.rows.size(); ++i) {
    const StudyRow& a = study.rows[i - 1];
    const StudyRow& b = study.rows[i];
    if (a.failed || b.failed) continue;
    const double lh = std::log(a.report.h / b.report.h);
    for (int c = 0; c < kNumErrors; ++c) {
      out[i][c] = std::log(a.report.errors[c] / b.report.errors[c]) / lh;
    }
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

void emit_csv(const ConvergenceStudy& study, std::ostream& os) {
  const std::vector<EocRow> eoc =
      study.rows.size() >= 2 ? compute_eoc(study) : std::vector<EocRow>(study.rows.size());
  os << kStudyCsvHeader << '\n';
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    const StudyRow& row = study.rows[i];
    os << row.level << ',' << format_number(row.report.h) << ',' << row.report.dofs;
    for (double e : row.report.errors) os << ',' << format_number(e);
    for (const auto& e : eoc[i]) os << ',' << (e ? format_number(*e) : "");
    os << ',';
    if (row.failed) {
      os << "failed";
    } else {
      os << row.report.pdas_iterations;
    }
    os << '\n';
  }
}

void emit_csv(const ConvergenceStudy& study, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_csv(study, os);
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

ConvergenceStudy parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kStudyCsvHeader) {
    throw std::runtime_error("unexpected CSV header");
  }
  ConvergenceStudy study;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != 16) throw std::runtime_error("CSV row with " + std::to_string(cells.size()) + " columns");
    StudyRow row;
    row.level = std::stoi(cells[0]);
    row.report.h = std::stod(cells[1]);
    row.report.dofs = std::stoi(cells[2]);
    for (int c = 0; c < kNumErrors; ++c) row.report.errors[c] = std::stod(cells[3 + c]);
    row.failed = cells[15] == "failed";
    row.report.pdas_iterations = row.failed ? 0 : std::stoi(cells[15]);
    study.rows.push_back(row);
  }
  return study;
}

}  // namespace gdmopt
