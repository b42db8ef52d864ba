// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>

#include "semilin/elliptic.hpp"
#include "semilin/monotone.hpp"
#include "semilin/order.hpp"

namespace semilin::example51 {

using expr::Expr;
using fem::FunctionPair;
using order::OrderedInterval;
using order::ProblemSpec;

/// The cross-coupled system
///
///   -Lap u1 + c1 u1 = lambda f1(u2),   du1/dn = lambda g1(u2)
///   -Lap u2 + c2 u2 = lambda f2(u1),   du2/dn = lambda g2(u1)
///
/// with f_i, g_i given as expressions in s. `f` and `g` hold the full
/// right-hand sides lambda f_i(s), lambda g_i(s); make_config takes care of
/// the factor.
struct Example51Config {
  double lambda = 1.0;
  std::array<Expr, 2> f;  // lambda f_i(s)
  std::array<Expr, 2> g;  // lambda g_i(s)
  std::array<Expr, 2> c;
  fem::MeshPtr mesh;
  /// Explicit epsilon; default is half the delta cap.
  std::optional<double> epsilon;
  /// Explicit M~; default is twice the computed lower bound.
  std::optional<double> m_tilde;
  bool concurrent = false;
};

/// Builds the config from expressions in s. An expression that mentions
/// `lambda` is taken to be the whole right-hand side lambda f_i(s); one that
/// does not is f_i(s) and gets multiplied by lambda.
Example51Config make_config(fem::MeshPtr mesh, double lambda, std::array<Expr, 2> f, std::array<Expr, 2> g,
                            std::array<Expr, 2> c);

/// Largest s at which the sublinearity probe is taken.
inline constexpr double kSublinearProbe = 1e6;

/// Sampled hypotheses on f_i, g_i: value 0 at 0, nondecreasing, f'(0) > 0,
/// f(S)/S <= 1e-2 f'(0) at S = kSublinearProbe. Throws Config naming the
/// offending function.
void validate(const Example51Config& cfg);

/// d e / d s at s = 0 from one-sided differences on [0, 2h], Richardson
/// extrapolated: 2 D(h) - D(2h).
double derivative_at_zero(const Expr& e, double lambda, double h = 1e-5);

/// Slopes of the xi functions: xi_1(s) = slope1 s - lambda f1(s) (and with
/// g1), xi_2(s) = slope2 s - lambda f2(s) (and with g2).
struct XiSlopes {
  double slope1 = 0.0;  // mu1 C1 a / b
  double slope2 = 0.0;  // mu2 b / (C2 a)
};

/// Largest sampled s such that all four xi functions are negative on the
/// sampled part of (0, s]; nullopt when they are not negative near 0.
/// Geometric grid on [1e-8, 1e8] refined by bisection at the first sign
/// change.
std::optional<double> find_delta(const std::array<Expr, 2>& f, const std::array<Expr, 2>& g, double lambda,
                                 const XiSlopes& slopes);

struct Construct51 {
  std::array<elliptic::SteklovEigenpair, 2> eigen;
  std::array<elliptic::AuxiliarySolution, 2> aux;
  double a = 0.0, b = 0.0;
  double C1 = 0.0, C2 = 0.0;
  double threshold = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  double m_tilde_lower = 0.0;
  double m_tilde = 0.0;
  ProblemSpec spec;
  OrderedInterval interval;
};

/// Runs the whole construction. Errors (Construction): lambda at or below
/// the threshold, empty delta range, failed verification of either pair.
Construct51 build_construct(const Example51Config& cfg);

/// The system with lambda f_1(u2), lambda f_2(u1), lambda g_1(u2),
/// lambda g_2(u1) on the config mesh.
ProblemSpec make_spec(const Example51Config& cfg);

struct Example51Run {
  Construct51 construct;
  monotone::ShiftConstants shifts;
  monotone::IterationResult min_run;
  monotone::IterationResult max_run;
};

/// build_construct followed by both monotone sweeps. The limits must be
/// strictly positive; otherwise InvariantViolation.
Example51Run run_example(const Example51Config& cfg, const monotone::IterationOptions& opts = {});

}  // namespace semilin::example51
