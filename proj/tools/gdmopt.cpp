// Command-line driver for convergence studies and discretisation diagnostics.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gdmopt/analysis.hpp"
#include "gdmopt/cases.hpp"
#include "gdmopt/study.hpp"

namespace {

// "A..B" or "A".
bool parse_levels(const std::string& text, int& lo, int& hi) {
  auto to_int = [](std::string_view s, int& v) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    if (!to_int(text, lo)) return false;
    hi = lo;
    return true;
  }
  return to_int(std::string_view(text).substr(0, dots), lo) &&
         to_int(std::string_view(text).substr(dots + 2), hi);
}

struct Options {
  std::string case_name = "example1";
  std::string scheme = "p1";
  std::string levels = "2..6";
  double shift = 0.0;
  std::string out;
  bool diagnostics = false;
  int pdas_max_iter = 100;
  double pdas_tol = 1e-10;
};

void add_common(CLI::App* cmd, Options& o, CLI::Option*& shift_opt) {
  cmd->add_option("--case", o.case_name, "Test case")
      ->check(CLI::IsMember(gdmopt::case_names()));
  cmd->add_option("--scheme", o.scheme, "Gradient scheme")
      ->check(CLI::IsMember({"p1", "ncp1", "hmm"}));
  cmd->add_option("--levels", o.levels, "Mesh levels A..B (level l: 2^l subdivisions)");
  shift_opt = cmd->add_option("--shift", o.shift,
                              "HMM on Cartesian meshes, cell points moved by F times the cell size");
  cmd->add_option("--out", o.out, "Output CSV path (stdout if omitted)");
}

// Writes to the file at `path`, or to stdout when it is empty.
template <typename Writer>
void write_output(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-discretisation solver for elliptic optimal control problems"};
  app.require_subcommand(1);
  Options o;
  CLI::Option* run_shift = nullptr;
  CLI::Option* diag_shift = nullptr;

  CLI::App* run = app.add_subcommand("run", "Convergence study: errors and EOC per level");
  add_common(run, o, run_shift);
  run->add_flag("--diagnostics", o.diagnostics, "Also write C_D, W_D, S_D per level to <out>.diag.csv");
  run->add_option("--pdas-max-iter", o.pdas_max_iter, "Active-set iteration limit")
      ->check(CLI::PositiveNumber);
  run->add_option("--pdas-tol", o.pdas_tol, "Active-set switching tolerance")
      ->check(CLI::PositiveNumber);

  CLI::App* diag = app.add_subcommand("diagnose", "C_D, W_D and S_D per level");
  add_common(diag, o, diag_shift);

  gdmopt::RunConfig config;
  try {
    app.parse(argc, argv);
    int lo = 0, hi = 0;
    if (!parse_levels(o.levels, lo, hi)) throw CLI::ValidationError("--levels", "expected A..B");
    config.case_name = o.case_name;
    config.scheme = gdmopt::parse_scheme(o.scheme);
    config.min_level = lo;
    config.max_level = hi;
    if (run_shift->count() > 0 || diag_shift->count() > 0) config.shift = o.shift;
    config.pdas.max_iter = o.pdas_max_iter;
    config.pdas.tol = o.pdas_tol;
    config.validate();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    bool ok = true;
    if (run->parsed()) {
      const gdmopt::StudyResult result = gdmopt::run_study(config);
      write_output(o.out, [&](std::ostream& os) { gdmopt::emit_csv(result.study, os); });
      for (const std::string& f : result.failures) std::cerr << "solver failure, " << f << "\n";
      ok = result.ok();
    }
    if (diag->parsed() || o.diagnostics) {
      const gdmopt::DiagnosticsResult result = gdmopt::diagnose(config);
      const std::string path = diag->parsed() || o.out.empty() ? o.out : o.out + ".diag.csv";
      write_output(path, [&](std::ostream& os) { gdmopt::emit_diagnostics_csv(result.rows, os); });
      for (const std::string& f : result.failures) std::cerr << "diagnostics failure, " << f << "\n";
      ok = ok && result.ok();
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
