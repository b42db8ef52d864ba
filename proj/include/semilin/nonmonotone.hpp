// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "semilin/order.hpp"

namespace semilin::nonmonotone {

using fem::FemFunction;
using fem::FunctionPair;
using order::OrderedInterval;
using order::ProblemSpec;

/// Equation i of the system with the other component frozen:
///
///   -Lap w + c_i w = f_i(x, w, companion)   (or f_i(x, companion, w) for i = 2)
///   dw/dn          = g_i(x, w, companion)
///
/// with a scalar sub/supersolution pair sub <= sup.
struct ScalarProblem {
  const ProblemSpec* spec = nullptr;
  std::size_t equation = 0;
  FemFunction companion;
  FemFunction sub;
  FemFunction sup;
  /// Optional bounds |f_i| <= K(x) and |g_i| <= K~(x) on the box, checked by
  /// sampling. Expressions in x, y.
  std::optional<expr::Expr> interior_bound;
  std::optional<expr::Expr> boundary_bound;
};

/// Sampled check of the optional bounds over [min sub, max sup] at every node.
/// Returns one message per violated bound; empty when no bound is violated
/// or none is supplied.
std::vector<std::string> check_bounds(const ScalarProblem& p, std::size_t grid = 17);

struct ScalarSolve {
  FemFunction solution;
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;   // ||r||_inf at the returned iterate
  double shift = 0.0;      // k_s as used
  bool retried = false;
};

/// Minimal solution above `sub` of the scalar problem, by the shifted
/// monotone iteration w <- w + K_s^{-1}(-r(w)), K_s = A + Mc_i + k_s (M + Mb),
/// with k_s = max(0, -min df/dw) + max(0, -min dg/dw) + 1 sampled per node
/// over [min sub, max sup]. Stops when both the increment and ||r||_inf fall
/// below `tol`. A wrong-direction step above 1e-8 triggers one retry with a
/// doubled shift, then InvariantViolation.
ScalarSolve solve_scalar(const ScalarProblem& p, double tol = 1e-10, std::size_t max_iter = 500);

struct ChainStep {
  FunctionPair next;
  std::array<ScalarSolve, 2> scalar;
};

/// One step of the subsolution chain: freeze u~_2 and solve equation 1 on
/// [u~_1, sup_1], freeze u~_1 and solve equation 2 on [u~_2, sup_2]. Both
/// solves read only the input pair, so they may run concurrently. The output
/// must pass verify_sub and dominate the input; otherwise InvariantViolation
/// (condition (Q) is the only thing that can break it).
ChainStep chain_step(const ProblemSpec& spec, const FunctionPair& current, const OrderedInterval& J,
                     double scalar_tol = 1e-10, bool concurrent = false);

struct ChainTrace {
  std::vector<FunctionPair> chain;                    // chain[0] = J.sub
  std::vector<std::array<double, 2>> increments;      // per step, n >= 1
  std::vector<std::array<double, 2>> residuals;       // ||r_i||_inf of chain[n], n >= 0
  std::vector<double> monotonicity_violations;        // max(chain[n-1] - chain[n]), n >= 1
  std::vector<double> upper_violations;               // max(chain[n] - J.sup), n >= 1
  std::vector<double> sub_violations;                 // verify_sub worst violation, n >= 0
  std::vector<double> sub_tolerances;                 // tolerance used for each, n >= 0
  std::vector<std::size_t> scalar_iterations;         // summed over both equations, n >= 1
  bool converged = false;
  std::size_t steps = 0;
};

struct ChainOptions {
  double tol = 1e-8;
  std::size_t max_chain = 100;
  bool concurrent = false;
  std::optional<expr::Expr> interior_bounds[2];
  std::optional<expr::Expr> boundary_bounds[2];
};

struct ChainResult {
  FunctionPair limit;
  ChainTrace trace;
  std::vector<std::string> warnings;
};

/// Iterates chain_step from J.sub until the increment is below tol and the
/// system residual below 10 tol. Stagnation is reported through
/// trace.converged, not thrown.
ChainResult run_chain(const ProblemSpec& spec, const OrderedInterval& J, const ChainOptions& opts = {});

}  // namespace semilin::nonmonotone
