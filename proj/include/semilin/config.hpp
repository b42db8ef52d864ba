// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "semilin/expr.hpp"
#include "semilin/fem.hpp"

namespace semilin::cli {

enum class Mode { SolveMonotone, SolveNonmonotone, Eigen, Verify, Kato, Example51 };

std::string_view mode_name(Mode m);
std::optional<Mode> mode_from_name(std::string_view name);

enum class DomainKind { Interval, Square };

/// Where the ordered interval comes from: the automatic construction for
/// the cross-coupled example (equations written in s), or user-supplied
/// pairs (expressions in x, y or nodal CSV files).
enum class IntervalSource { Auto, Explicit };

/// A user-supplied pair: either two expressions in x, y or a CSV file with
/// u1, u2 columns in node order.
struct PairSource {
  std::optional<expr::Expr> first;
  std::optional<expr::Expr> second;
  std::optional<std::filesystem::path> file;

  bool empty() const { return !first && !second && !file; }
};

struct RunConfig {
  std::filesystem::path origin;  // config file, for messages and relative paths

  DomainKind domain = DomainKind::Interval;
  std::size_t n = 64;

  double lambda = 1.0;
  expr::Expr c1, c2;
  expr::Expr f1, f2, g1, g2;

  std::optional<Mode> mode;
  double tol = 1e-8;
  std::size_t max_iter = 200;
  std::size_t max_chain = 100;
  std::optional<double> tau;  // fixed verification tolerance; h-scaled by default

  std::optional<IntervalSource> interval;  // default: Auto for example51, else Explicit
  PairSource sub, super;
  PairSource kato_a, kato_b;
  bool lattice_max = true;

  std::optional<double> epsilon;
  std::optional<double> m_tilde;
  std::optional<expr::Expr> bound_f[2];
  std::optional<expr::Expr> bound_g[2];

  std::filesystem::path out_dir = "out";
  bool deterministic = true;
  bool quiet = false;

  IntervalSource interval_source() const;
  fem::MeshPtr make_mesh() const;
};

/// Parses the sectioned key = value format. Errors are Config errors of the
/// form "<origin>:<line>: <message>".
RunConfig parse_config(std::string_view text, const std::filesystem::path& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Mode-dependent checks: a mode is set, required keys are present,
/// expressions use only the variables the mode allows. Throws Config.
void validate(const RunConfig& cfg);

}  // namespace semilin::cli
