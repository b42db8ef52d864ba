// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "semilin/config.hpp"
#include "semilin/error.hpp"

namespace semilin::cli {

/// 0 success, 1 internal, 2 config, 3 construction, 4 non-convergence,
/// 5 invariant violation.
int exit_code_for(ErrorKind kind);

struct RunSummary {
  Mode mode = Mode::Verify;
  int exit_code = 0;
  std::string status = "ok";
  std::string message;
  /// Every numeric result of the run, in output order; flags are 0/1. The
  /// same list is written to constants.csv.
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
  double wall_clock = 0.0;

  /// Value by key; throws InvalidArgument when absent.
  double value(std::string_view key) const;
};

/// Runs one configured experiment and writes trace.csv (iterative modes),
/// fields.csv or fields.vtk, constants.csv and summary.txt into
/// cfg.out_dir. Engine errors do not escape: they set exit_code, status and
/// message, and whatever was computed before the error is still written.
RunSummary execute(const RunConfig& cfg);

void write_summary(const std::filesystem::path& path, const RunSummary& s);

}  // namespace semilin::cli
