// SPDX-License-Identifier: Apache-2.0
// Closed-form and root-finding oracles shared by the test binaries. None of
// this goes through the library.
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "semilin/expr.hpp"
#include "semilin/order.hpp"

namespace semilin::testing {

/// Plain bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int steps = 200) {
  double flo = f(lo);
  for (int k = 0; k < steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// 1D, c = 1: cosh(w (x - 1/2)) is the first eigenfunction when
/// w tanh(w/2) + w^2 = 1, and then mu = 1 - w^2.
inline double steklov_omega() {
  return bisect([](double w) { return w * std::tanh(0.5 * w) + w * w - 1.0; }, 0.0, 1.0);
}
inline double steklov_mu() {
  const double w = steklov_omega();
  return 1.0 - w * w;
}

/// 1D, c = 1: -phi'' + phi = 1, phi' = 1 on the boundary (outward).
inline double aux_phi(double x) { return 1.0 + std::cosh(x - 0.5) / std::sinh(0.5); }
inline double aux_sup() { return aux_phi(0.0); }
inline double aux_min_normalized() { return aux_phi(0.5) / aux_phi(0.0); }

inline expr::Expr ex(const std::string& s) { return expr::parse_or_throw(s); }

/// Cross-coupled example on the unit interval: f_i = g_i = lambda s/(1+s).
inline order::ProblemSpec saturating_spec(std::size_t n, double lambda = 1.0) {
  return order::make_problem(fem::unit_interval_mesh(n), ex("1"), ex("1"), ex("lambda*u2/(1+u2)"),
                             ex("lambda*u1/(1+u1)"), ex("lambda*u2/(1+u2)"), ex("lambda*u1/(1+u1)"), lambda);
}

/// Linear test: -u'' + u = 1, u' = 0; the constant 1 solves it.
inline order::ProblemSpec unit_load_spec(fem::MeshPtr mesh) {
  return order::make_problem(std::move(mesh), ex("1"), ex("1"), ex("1"), ex("1"), ex("0"), ex("0"), 0.0);
}

inline fem::FunctionPair constant_pair(const fem::MeshPtr& mesh, double a, double b) {
  return {fem::FemFunction::constant(mesh, a), fem::FemFunction::constant(mesh, b)};
}

inline double max_abs_diff(const fem::FemFunction& a, const fem::FemFunction& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace semilin::testing
