#include "gdmopt/study.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

#include "gdmopt/diagnostics.hpp"
#include "gdmopt/schemes.hpp"

namespace gdmopt {

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) job(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

std::string level_message(int level, const std::string& what) {
  return "level " + std::to_string(level) + ": " + what;
}

}  // namespace

void RunConfig::validate() const {
  make_case(case_name);
  if (min_level < 0 || max_level > 12) throw std::invalid_argument("levels must lie in 0..12");
  if (min_level > max_level) throw std::invalid_argument("min level above max level");
  if (shift) {
    if (scheme != SchemeKind::HMM) throw std::invalid_argument("--shift requires the hmm scheme");
    if (make_case(case_name).domain != Domain::UnitSquare) {
      throw std::invalid_argument("--shift requires a unit-square case");
    }
  }
  if (pdas.max_iter < 1) throw std::invalid_argument("pdas max iterations must be >= 1");
  if (!(pdas.tol > 0.0)) throw std::invalid_argument("pdas tolerance must be positive");
}

PolytopalMesh build_level_mesh(const TestCase& tc, SchemeKind scheme, int level,
                               std::optional<double> shift) {
  const int m = 1 << level;
  if (shift) {
    if (scheme != SchemeKind::HMM || tc.domain != Domain::UnitSquare) {
      throw std::invalid_argument("shifted Cartesian meshes are only used with HMM on the unit square");
    }
    return build_cartesian_mesh(m, *shift);
  }
  return tc.domain == Domain::LShape ? build_lshape_triangulation(m)
                                     : build_unit_square_triangulation(m);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GDMOPT_THREADS")) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), value);
    if (ec == std::errc() && *ptr == '\0' && value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

StudyResult run_study(const RunConfig& config) {
  config.validate();
  const TestCase tc = make_case(config.case_name);
  const int n = config.max_level - config.min_level + 1;
  std::vector<StudyRow> rows(n);
  std::vector<std::string> errors(n);

  parallel_for(n, resolve_threads(config.threads), [&](int i) {
    const int level = config.min_level + i;
    StudyRow& row = rows[i];
    row.level = level;
    try {
      auto mesh = std::make_shared<const PolytopalMesh>(
          build_level_mesh(tc, config.scheme, level, config.shift));
      row.report.h = mesh->h();
      const GradientDiscretisation gd = make_scheme(config.scheme, mesh, tc.bc);
      row.report.dofs = gd.dofs().num_free();
      const KKTSolution sol = solve_kkt_pdas(tc.problem(), gd, config.pdas);
      row.report = compute_errors(gd, sol, tc);
    } catch (const std::exception& e) {
      row.failed = true;
      row.report.errors.fill(std::numeric_limits<double>::quiet_NaN());
      errors[i] = level_message(level, e.what());
    }
  });

  StudyResult out;
  out.study.rows = std::move(rows);
  for (const std::string& e : errors) {
    if (!e.empty()) out.failures.push_back(e);
  }
  return out;
}

DiagnosticsResult diagnose(const RunConfig& config) {
  config.validate();
  const TestCase tc = make_case(config.case_name);
  const int n = config.max_level - config.min_level + 1;
  std::vector<DiagnosticsRow> rows(n);
  std::vector<std::string> errors(n);

  parallel_for(n, resolve_threads(config.threads), [&](int i) {
    const int level = config.min_level + i;
    DiagnosticsRow& row = rows[i];
    row.level = level;
    try {
      auto mesh = std::make_shared<const PolytopalMesh>(
          build_level_mesh(tc, config.scheme, level, config.shift));
      row.h = mesh->h();
      const GradientDiscretisation gd = make_scheme(config.scheme, mesh, tc.bc);
      row.c_d = compute_cd(gd);
      row.w_d_y = compute_wd(gd, tc.grad_y, tc.laplacian_y);
      row.s_d_y = compute_sd_upper(gd, tc.y, tc.grad_y).upper();
      row.s_d_p = compute_sd_upper(gd, tc.p, tc.grad_p).upper();
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.c_d = row.w_d_y = row.s_d_y = row.s_d_p = nan;
      row.failed = true;
      errors[i] = level_message(level, e.what());
    }
  });

  DiagnosticsResult out;
  out.rows = std::move(rows);
  for (const std::string& e : errors) {
    if (!e.empty()) out.failures.push_back(e);
  }
  return out;
}

void emit_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, std::ostream& os) {
  os << kDiagnosticsCsvHeader << '\n';
  for (const DiagnosticsRow& r : rows) {
    os << r.level << ',' << format_number(r.h) << ',' << format_number(r.c_d) << ','
       << format_number(r.w_d_y) << ',' << format_number(r.s_d_y) << ','
       << format_number(r.s_d_p) << '\n';
  }
}

}  // namespace gdmopt
