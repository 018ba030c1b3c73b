// Relative errors against manufactured solutions, experimental orders of
// convergence and CSV reports.

#ifndef GDMOPT_ANALYSIS_HPP
#define GDMOPT_ANALYSIS_HPP

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gdmopt/cases.hpp"
#include "gdmopt/control.hpp"
#include "gdmopt/gradient_discretisation.hpp"

namespace gdmopt {

/// Column order of ErrorReport::errors.
enum ErrorColumn { kErrY = 0, kErrGradY, kErrP, kErrGradP, kErrU, kErrUTilde, kNumErrors };

struct ErrorReport {
  double h = 0.0;
  int dofs = 0;  // free unknowns
  std::array<double, kNumErrors> errors{};
  int pdas_iterations = 0;
};

/// Relative errors:
///   ||Pi_D y_D - y_T|| / ||y_T||, ||grad_D y_D - grad y|| / ||grad y||, same for p,
///   ||u_h - u|| / ||u||, ||u~_h - u~|| / ||u||.
/// Finite elements: L2 norms with the 7-point rule, energy norms with the
/// midpoint of each cell. HMM: everything with the midpoint rule,
/// y_T = y(x_K) cellwise. Controls: 3-point rule; post-processed controls:
/// 7-point rule (FE) or midpoint (HMM).
ErrorReport compute_errors(const GradientDiscretisation& gd, const KKTSolution& solution,
                           const TestCase& tc);

struct StudyRow {
  int level = 0;
  ErrorReport report;
  bool failed = false;
};

struct ConvergenceStudy {
  std::vector<StudyRow> rows;  // increasing level
};

using EocRow = std::array<std::optional<double>, kNumErrors>;

/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}) per error column; the first row
/// and rows next to a failed level are empty.
std::vector<EocRow> compute_eoc(const ConvergenceStudy& study);

inline constexpr const char* kStudyCsvHeader =
    "level,h,dofs,err_y,err_grad_y,err_p,err_grad_p,err_u,err_u_tilde,"
    "eoc_y,eoc_grad_y,eoc_p,eoc_grad_p,eoc_u,eoc_u_tilde,pdas_iters";

/// Numbers in scientific notation with 10 significant digits.
std::string format_number(double v);

void emit_csv(const ConvergenceStudy& study, std::ostream& os);
void emit_csv(const ConvergenceStudy& study, const std::string& path);

/// Parses a CSV written by emit_csv (used by tests and tooling).
ConvergenceStudy parse_csv(std::istream& is);

}  // namespace gdmopt

#endif  // GDMOPT_ANALYSIS_HPP
