// SPDX-License-Identifier: Apache-2.0
// Command-line front end: one subcommand per run mode.
#include <CLI11.hpp>
#include <fmt/format.h>

#include "semilin/config.hpp"
#include "semilin/error.hpp"
#include "semilin/output.hpp"
#include "semilin/run.hpp"

namespace {

using namespace semilin;

int run_mode(cli::Mode mode, const std::string& config_path, const std::string& out_dir, bool deterministic,
             bool quiet) {
  cli::RunConfig cfg;
  try {
    cfg = cli::load_config(config_path);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return cli::exit_code_for(e.kind());
  }
  cfg.mode = mode;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.deterministic = deterministic;
  cfg.quiet = quiet;

  const auto s = cli::execute(cfg);
  if (s.exit_code != 0) fmt::print(stderr, "error ({}): {}\n", s.status, s.message);
  if (!quiet) {
    fmt::print("mode {}: {} (exit {})\n", cli::mode_name(mode), s.status, s.exit_code);
    for (const auto& w : s.warnings) fmt::print("warning: {}\n", w);
    for (const auto& [k, v] : s.values) fmt::print("  {} = {}\n", k, cli::format_number(v));
    for (const auto& f : s.files) fmt::print("wrote {}\n", f.string());
  }
  return s.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal and maximal solutions of coupled semilinear elliptic systems with nonlinear boundary "
               "conditions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool deterministic = true;
  bool quiet = false;

  const std::pair<cli::Mode, const char*> modes[] = {
      {cli::Mode::SolveMonotone, "minimal and maximal solutions by monotone iteration"},
      {cli::Mode::SolveNonmonotone, "a solution by the subsolution chain (no own-variable monotonicity needed)"},
      {cli::Mode::Eigen, "first Steklov-type eigenpairs and auxiliary solutions"},
      {cli::Mode::Verify, "check a sub/supersolution pair"},
      {cli::Mode::Kato, "check the lattice max/min of two sub- or supersolutions"},
      {cli::Mode::Example51, "automatic sub/supersolutions for the cross-coupled example, then solve"},
  };
  std::optional<cli::Mode> chosen;
  for (const auto& [mode, help] : modes) {
    auto* sub = app.add_subcommand(std::string(cli::mode_name(mode)), help);
    sub->add_option("-c,--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_dir, "output directory (default: [run] out or ./out)");
    sub->add_flag("--deterministic,!--nondeterministic", deterministic,
                  "serial, bitwise reproducible execution (default on)");
    sub->add_flag("-q,--quiet", quiet, "only report errors");
    sub->callback([&chosen, m = mode] { chosen = m; });
  }

  CLI11_PARSE(app, argc, argv);
  if (!chosen) return 2;
  return run_mode(*chosen, config_path, out_dir, deterministic, quiet);
}
