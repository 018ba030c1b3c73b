// Convergence studies over mesh levels: mesh construction per level,
// KKT solve, errors, and per-level discretisation diagnostics.

#ifndef GDMOPT_STUDY_HPP
#define GDMOPT_STUDY_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gdmopt/analysis.hpp"
#include "gdmopt/cases.hpp"
#include "gdmopt/control.hpp"
#include "gdmopt/gradient_discretisation.hpp"
#include "gdmopt/mesh.hpp"

namespace gdmopt {

struct RunConfig {
  std::string case_name = "example1";
  SchemeKind scheme = SchemeKind::ConformingP1;
  int min_level = 2;
  int max_level = 6;
  /// HMM only: Cartesian mesh with cell points moved by shift * cell size
  /// in both directions. Without it HMM uses the triangulation with
  /// centroids.
  std::optional<double> shift;
  PdasConfig pdas;
  int threads = 0;  // 0: GDMOPT_THREADS or the hardware concurrency

  void validate() const;
};

/// Level l has m = 2^l subdivisions per unit length.
PolytopalMesh build_level_mesh(const TestCase& tc, SchemeKind scheme, int level,
                               std::optional<double> shift = std::nullopt);

struct StudyResult {
  ConvergenceStudy study;
  std::vector<std::string> failures;  // "level N: message"
  bool ok() const { return failures.empty(); }
};

/// Solves every level (in parallel, rows in level order). A failing level
/// yields a row with NaN errors marked failed.
StudyResult run_study(const RunConfig& config);

struct DiagnosticsRow {
  int level = 0;
  double h = 0.0;
  double c_d = 0.0;
  double w_d_y = 0.0;  // W_D(A grad y)
  double s_d_y = 0.0;  // upper bounds of S_D(y), S_D(p)
  double s_d_p = 0.0;
  bool failed = false;
};

struct DiagnosticsResult {
  std::vector<DiagnosticsRow> rows;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

DiagnosticsResult diagnose(const RunConfig& config);

inline constexpr const char* kDiagnosticsCsvHeader = "level,h,c_d,w_d_y,s_d_y,s_d_p";

void emit_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, std::ostream& os);

/// Worker count: config value if positive, else GDMOPT_THREADS if set to a
/// positive integer, else the hardware concurrency.
int resolve_threads(int requested);

}  // namespace gdmopt

#endif  // GDMOPT_STUDY_HPP
