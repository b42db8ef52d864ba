// SPDX-License-Identifier: Apache-2.0
#include "semilin/nonmonotone.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <future>

#include "semilin/elliptic.hpp"
#include "semilin/error.hpp"

namespace semilin::nonmonotone {

namespace {

using expr::Var;
using linalg::Vector;

Var own_var(std::size_t i) { return i == 0 ? Var::U1 : Var::U2; }
Var other_var(std::size_t i) { return i == 0 ? Var::U2 : Var::U1; }

expr::Bindings point(const ScalarProblem& p, std::size_t j, double w) {
  expr::Bindings b = p.spec->node_params[j];
  b.set(own_var(p.equation), w).set(other_var(p.equation), p.companion[j]);
  return b;
}

/// r(w) = (A + Mc_i) w - M f(w) - Mb g(w) for the frozen problem.
Vector scalar_residual(const ScalarProblem& p, const Vector& w) {
  const auto& spec = *p.spec;
  const auto& mask = spec.mesh->boundary_node_mask();
  Vector fv(w.size()), gv(w.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const auto b = point(p, j, w[j]);
    fv[j] = spec.f[p.equation].eval(b);
    if (mask[j]) gv[j] = spec.g[p.equation].eval(b);
  }
  Vector r = spec.forms.operator_matrix(p.equation) * w;
  linalg::axpy(-1.0, fem::load_interior(spec.forms, fv), r);
  linalg::axpy(-1.0, fem::load_boundary(spec.forms, gv), r);
  return r;
}

double scalar_shift(const ScalarProblem& p) {
  const auto& spec = *p.spec;
  const auto& mask = spec.mesh->boundary_node_mask();
  const double lo = p.sub.min();
  const double hi = p.sup.max();
  double worst_f = 0.0, worst_g = 0.0;
  for (std::size_t j = 0; j < spec.mesh->node_count(); ++j) {
    const auto& node = spec.mesh->nodes()[j];
    std::vector<expr::SampleAxis> axes{{Var::X, {node[0]}},
                                       {Var::Y, {node[1]}},
                                       {other_var(p.equation), {p.companion[j]}},
                                       expr::interval_axis(own_var(p.equation), lo, hi, 17)};
    expr::Bindings fixed;
    fixed.set(Var::Lambda, spec.lambda);
    worst_f = std::max(worst_f, -expr::sampled_partial(spec.f[p.equation], own_var(p.equation), axes, fixed).min_slope);
    if (mask[j]) {
      worst_g =
          std::max(worst_g, -expr::sampled_partial(spec.g[p.equation], own_var(p.equation), axes, fixed).min_slope);
    }
  }
  return worst_f + worst_g + 1.0;
}

struct WrongWay {
  double violation;
};

ScalarSolve scalar_iteration(const ScalarProblem& p, double shift, double tol, std::size_t max_iter) {
  const elliptic::RobinSystem sys(p.spec->forms, shift, p.equation);
  ScalarSolve out{p.sub, false, 0, 0.0, shift, false};
  Vector w = p.sub.values();
  Vector r = scalar_residual(p, w);
  for (std::size_t n = 1; n <= max_iter; ++n) {
    Vector minus_r = r;
    for (double& v : minus_r) v = -v;
    const Vector dw = sys.solve_assembled(minus_r, 1e-13);
    double inc = 0.0, wrong = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      inc = std::max(inc, std::abs(dw[j]));
      wrong = std::max(wrong, -dw[j]);
      w[j] += dw[j];
    }
    if (wrong > 1e-8) throw WrongWay{wrong};
    r = scalar_residual(p, w);
    out.iterations = n;
    if (inc < tol && linalg::norm_inf(r) < tol) {
      out.converged = true;
      break;
    }
  }
  out.residual = linalg::norm_inf(r);
  out.solution = FemFunction(p.spec->mesh, std::move(w));
  return out;
}

}  // namespace

std::vector<std::string> check_bounds(const ScalarProblem& p, std::size_t grid) {
  std::vector<std::string> msgs;
  const auto& spec = *p.spec;
  const auto& mask = spec.mesh->boundary_node_mask();
  const auto axis = expr::interval_axis(own_var(p.equation), p.sub.min(), p.sup.max(), grid);
  double worst_f = 0.0, worst_g = 0.0;
  for (std::size_t j = 0; j < spec.mesh->node_count(); ++j) {
    for (double s : axis.points) {
      const auto b = point(p, j, s);
      if (p.interior_bound) worst_f = std::max(worst_f, std::abs(spec.f[p.equation].eval(b)) - p.interior_bound->eval(b));
      if (p.boundary_bound && mask[j]) {
        worst_g = std::max(worst_g, std::abs(spec.g[p.equation].eval(b)) - p.boundary_bound->eval(b));
      }
    }
  }
  if (worst_f > 0.0) {
    msgs.push_back(fmt::format("condition (H1) fails for equation {}: |f| exceeds the bound by {:.3e}",
                               p.equation + 1, worst_f));
  }
  if (worst_g > 0.0) {
    msgs.push_back(fmt::format("condition (H2) fails for equation {}: |g| exceeds the bound by {:.3e}",
                               p.equation + 1, worst_g));
  }
  return msgs;
}

ScalarSolve solve_scalar(const ScalarProblem& p, double tol, std::size_t max_iter) {
  if (p.spec == nullptr) throw invalid_argument("scalar problem without a system");
  if (p.equation > 1) throw invalid_argument("scalar problem equation index out of range");
  for (std::size_t j = 0; j < p.sub.size(); ++j) {
    if (p.sub[j] > p.sup[j]) {
      throw invalid_argument(fmt::format("scalar sub exceeds scalar super at node {} ({} > {})", j, p.sub[j], p.sup[j]));
    }
  }
  const double shift = scalar_shift(p);
  try {
    return scalar_iteration(p, shift, tol, max_iter);
  } catch (const WrongWay&) {
  }
  try {
    auto out = scalar_iteration(p, 2.0 * shift, tol, max_iter);
    out.retried = true;
    return out;
  } catch (const WrongWay& again) {
    throw invariant_error(fmt::format(
        "scalar monotone iteration for equation {} moved down by {:.3e} even with doubled shift {}",
        p.equation + 1, again.violation, 2.0 * shift));
  }
}

ChainStep chain_step(const ProblemSpec& spec, const FunctionPair& current, const OrderedInterval& J,
                     double scalar_tol, bool concurrent) {
  const double tau_in = order::h_scaled_tolerance(spec, current);
  const auto pre = order::verify_sub(spec, current, tau_in);
  if (!pre.pass) {
    throw invalid_argument(fmt::format("chain_step input is not a subsolution (violation {:.3e} > {:.3e})",
                                       pre.worst_violation, tau_in));
  }

  auto solve = [&](std::size_t i) {
    ScalarProblem p{&spec, i, current[1 - i], current[i], J.sup[i], std::nullopt, std::nullopt};
    return solve_scalar(p, scalar_tol);
  };

  std::optional<ScalarSolve> first, second;
  if (concurrent) {
    auto pending = std::async(std::launch::async, solve, std::size_t{1});
    first.emplace(solve(0));
    second.emplace(pending.get());
  } else {
    first.emplace(solve(0));
    second.emplace(solve(1));
  }
  FunctionPair next{first->solution, second->solution};

  const double drop = order::order_violation(current, next);
  if (drop > 1e-10) {
    throw invariant_error(fmt::format("chain step decreased the subsolution by {:.3e}", drop));
  }
  const double tau_out = order::h_scaled_tolerance(spec, next);
  const auto post = order::verify_sub(spec, next, tau_out);
  if (!post.pass) {
    throw invariant_error(fmt::format(
        "chain step output is not a subsolution (violation {:.3e} > {:.3e}); condition (Q) appears to fail",
        post.worst_violation, tau_out));
  }
  return {std::move(next), {std::move(*first), std::move(*second)}};
}

ChainResult run_chain(const ProblemSpec& spec, const OrderedInterval& J, const ChainOptions& opts) {
  ChainResult out{J.sub, {}, {}};
  auto& trace = out.trace;

  for (std::size_t i = 0; i < 2; ++i) {
    if (!opts.interior_bounds[i] && !opts.boundary_bounds[i]) continue;
    ScalarProblem p{&spec, i, J.sup[1 - i], J.sub[i], J.sup[i], opts.interior_bounds[i], opts.boundary_bounds[i]};
    for (auto& m : check_bounds(p)) out.warnings.push_back(std::move(m));
  }
  if (!opts.interior_bounds[0] && !opts.interior_bounds[1] && !opts.boundary_bounds[0] && !opts.boundary_bounds[1]) {
    out.warnings.push_back("no (H1)/(H2) bounds supplied; boundedness on J is not certified");
  }

  auto residual_norms = [&](const FunctionPair& p) {
    return std::array<double, 2>{linalg::norm_inf(order::residual(spec, 0, p)),
                                 linalg::norm_inf(order::residual(spec, 1, p))};
  };
  auto record_sub = [&](const FunctionPair& p) {
    const double tau = order::h_scaled_tolerance(spec, p);
    trace.sub_violations.push_back(order::verify_sub(spec, p, tau).worst_violation);
    trace.sub_tolerances.push_back(tau);
  };

  FunctionPair u = J.sub;
  trace.chain.push_back(u);
  trace.residuals.push_back(residual_norms(u));
  record_sub(u);

  const double scalar_tol = 0.1 * opts.tol;
  for (std::size_t n = 1; n <= opts.max_chain; ++n) {
    auto step = chain_step(spec, u, J, scalar_tol, opts.concurrent);
    std::array<double, 2> inc{};
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < u[i].size(); ++j) inc[i] = std::max(inc[i], std::abs(step.next[i][j] - u[i][j]));
    }
    trace.increments.push_back(inc);
    trace.monotonicity_violations.push_back(std::max(0.0, order::order_violation(u, step.next)));
    trace.upper_violations.push_back(std::max(0.0, order::order_violation(step.next, J.sup)));
    trace.scalar_iterations.push_back(step.scalar[0].iterations + step.scalar[1].iterations);
    u = std::move(step.next);
    trace.chain.push_back(u);
    const auto r = residual_norms(u);
    trace.residuals.push_back(r);
    record_sub(u);
    trace.steps = n;
    if (std::max(inc[0], inc[1]) < opts.tol && std::max(r[0], r[1]) < 10.0 * opts.tol) {
      trace.converged = true;
      break;
    }
  }
  out.limit = std::move(u);
  return out;
}

}  // namespace semilin::nonmonotone
