// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "semilin/elliptic.hpp"
#include "semilin/order.hpp"

namespace semilin::monotone {

using fem::FunctionPair;
using order::OrderedInterval;
using order::ProblemSpec;

/// Shift constants making f_i + k_hat_i s_i and g_i + k_bar_i s_i
/// nondecreasing in s_i on the box J, and the global shift
/// k = k_hat_1 + k_hat_2 + k_bar_1 + k_bar_2 + 1.
struct ShiftConstants {
  std::array<double, 2> k_hat{};
  std::array<double, 2> k_bar{};
  double k = 1.0;

  double sum() const { return k_hat[0] + k_hat[1] + k_bar[0] + k_bar[1]; }
  ShiftConstants doubled() const;
};

/// Shift constants from a given (k_hat, k_bar); k = sum + 1.
ShiftConstants make_shifts(std::array<double, 2> k_hat, std::array<double, 2> k_bar);

/// Samples d f_i / d u_i over [min sub_i, max sup_i] for both components
/// times the node coordinates (interior f) or boundary node coordinates
/// (boundary g); at most 65 distinct coordinates per axis are used.
ShiftConstants estimate_shifts(const ProblemSpec& spec, const OrderedInterval& J, std::size_t grid = 17);

/// The fixed-point operator of the monotone scheme. T(u) = w where, for
/// i = 1, 2 independently,
///
///   -Lap w_i + c_i w_i + k w_i = f_i(x, u1, u2) + k u_i    in Omega,
///   dw_i/dn + k w_i            = g_i(x, u1, u2) + k u_i    on the boundary.
///
/// Solved in correction form w_i = u_i - K_i^{-1} r_i(u), which is the same
/// linear system with a right-hand side that shrinks as the iteration
/// converges.
class MonotoneOperator {
 public:
  MonotoneOperator(const ProblemSpec& spec, const ShiftConstants& shifts, double solve_tol = 1e-13,
                   bool concurrent_equations = false);

  const ShiftConstants& shifts() const noexcept { return shifts_; }

  /// T(u). If `residuals` is non-null it receives r_i(u).
  FunctionPair apply(const FunctionPair& u, std::array<linalg::Vector, 2>* residuals = nullptr) const;

 private:
  const ProblemSpec* spec_;
  ShiftConstants shifts_;
  double solve_tol_;
  bool concurrent_;
  std::array<elliptic::RobinSystem, 2> systems_;
};

FunctionPair apply_T(const ProblemSpec& spec, const ShiftConstants& shifts, const FunctionPair& u);

struct IterationTrace {
  std::vector<FunctionPair> snapshots;              // iterate 0 is the starting pair
  std::vector<std::array<double, 2>> increments;    // ||u_n - u_{n-1}||_inf, n >= 1
  std::vector<std::array<double, 2>> residuals;     // ||r_i(u_n)||_inf, n >= 0
  std::vector<double> monotonicity_violations;      // wrong-direction nodal step, n >= 1
  std::vector<double> interval_violations;          // distance outside J, n >= 1
  std::vector<std::array<double, 2>> energy_norms;  // ||u_{i,n}||_{c_i}, n >= 0
  double energy_bound = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  bool retried_with_doubled_shifts = false;
};

struct IterationOptions {
  double tol = 1e-8;
  std::size_t max_iter = 200;
  /// Wrong-direction steps above this abort (after one retry with doubled
  /// shifts).
  double monotonicity_abort = 1e-8;
  bool concurrent_equations = false;
  bool keep_snapshots = true;
};

struct IterationResult {
  FunctionPair limit;
  IterationTrace trace;
  ShiftConstants shifts;  // as used, after any retry
};

/// Iterates T from J.sub. Stops when the nodal increment is below tol and
/// the residual below 10 tol in both components; otherwise returns the last
/// iterate with trace.converged = false.
IterationResult iterate_min(const ProblemSpec& spec, const ShiftConstants& shifts, const OrderedInterval& J,
                            const IterationOptions& opts = {});
/// Mirror of iterate_min from J.sup, nonincreasing.
IterationResult iterate_max(const ProblemSpec& spec, const ShiftConstants& shifts, const OrderedInterval& J,
                            const IterationOptions& opts = {});

/// Energy bound for iterates inside J: with U = max(|sub|, |sup|) nodally and
/// F_i, G_i the largest |f_i|, |g_i| over the four nodal corners of J,
/// sqrt(U^T (M (F_i + k U) + Mb (G_i + k U))), maximised over i.
double energy_bound(const ProblemSpec& spec, const OrderedInterval& J, double k);

}  // namespace semilin::monotone
