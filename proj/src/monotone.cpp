// SPDX-License-Identifier: Apache-2.0
#include "semilin/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <future>
#include <set>

#include "semilin/error.hpp"

namespace semilin::monotone {

namespace {

using expr::Var;
using linalg::Vector;

constexpr std::size_t kMaxCoordinateSamples = 65;

std::vector<double> thin(const std::set<double>& coords) {
  std::vector<double> all(coords.begin(), coords.end());
  if (all.size() <= kMaxCoordinateSamples) return all;
  std::vector<double> out;
  for (std::size_t k = 0; k < kMaxCoordinateSamples; ++k) {
    out.push_back(all[k * (all.size() - 1) / (kMaxCoordinateSamples - 1)]);
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> coordinate_axes(const fem::Mesh& mesh, bool boundary_only) {
  std::set<double> xs, ys;
  for (std::size_t j = 0; j < mesh.node_count(); ++j) {
    if (boundary_only && !mesh.boundary_node_mask()[j]) continue;
    xs.insert(mesh.nodes()[j][0]);
    ys.insert(mesh.nodes()[j][1]);
  }
  return {thin(xs), thin(ys)};
}

}  // namespace

ShiftConstants ShiftConstants::doubled() const {
  return make_shifts({2.0 * k_hat[0], 2.0 * k_hat[1]}, {2.0 * k_bar[0], 2.0 * k_bar[1]});
}

ShiftConstants make_shifts(std::array<double, 2> k_hat, std::array<double, 2> k_bar) {
  for (double v : {k_hat[0], k_hat[1], k_bar[0], k_bar[1]}) {
    if (!(v >= 0.0)) throw invalid_argument(fmt::format("shift constants must be >= 0, got {}", v));
  }
  ShiftConstants s{k_hat, k_bar, 0.0};
  s.k = s.sum() + 1.0;
  return s;
}

ShiftConstants estimate_shifts(const ProblemSpec& spec, const OrderedInterval& J, std::size_t grid) {
  const std::array<std::pair<double, double>, 2> box{std::pair{J.sub.first.min(), J.sup.first.max()},
                                                     std::pair{J.sub.second.min(), J.sup.second.max()}};
  expr::Bindings fixed;
  fixed.set(Var::Lambda, spec.lambda);

  auto slope_floor = [&](const expr::Expr& e, Var own, bool boundary) {
    const auto [xs, ys] = coordinate_axes(*spec.mesh, boundary);
    std::vector<expr::SampleAxis> axes{{Var::X, xs},
                                       {Var::Y, ys},
                                       expr::interval_axis(Var::U1, box[0].first, box[0].second, grid),
                                       expr::interval_axis(Var::U2, box[1].first, box[1].second, grid)};
    return std::max(0.0, -expr::sampled_partial(e, own, axes, fixed).min_slope);
  };

  std::array<double, 2> k_hat{}, k_bar{};
  for (std::size_t i = 0; i < 2; ++i) {
    const Var own = i == 0 ? Var::U1 : Var::U2;
    k_hat[i] = slope_floor(spec.f[i], own, false);
    k_bar[i] = slope_floor(spec.g[i], own, true);
  }
  return make_shifts(k_hat, k_bar);
}

MonotoneOperator::MonotoneOperator(const ProblemSpec& spec, const ShiftConstants& shifts, double solve_tol,
                                   bool concurrent_equations)
    : spec_(&spec),
      shifts_(shifts),
      solve_tol_(solve_tol),
      concurrent_(concurrent_equations),
      systems_{elliptic::RobinSystem(spec.forms, shifts.k, 0), elliptic::RobinSystem(spec.forms, shifts.k, 1)} {
  if (!(shifts.k > 0.0)) throw invalid_argument("the global shift k must be positive");
}

FunctionPair MonotoneOperator::apply(const FunctionPair& u, std::array<Vector, 2>* residuals) const {
  auto solve_one = [&](std::size_t i) {
    Vector r = order::residual(*spec_, i, u);
    Vector minus_r = r;
    for (double& v : minus_r) v = -v;
    const Vector correction = systems_[i].solve_assembled(minus_r, solve_tol_);
    Vector w = u[i].values();
    linalg::axpy(1.0, correction, w);
    if (residuals != nullptr) (*residuals)[i] = std::move(r);
    return w;
  };

  std::array<Vector, 2> w;
  if (concurrent_) {
    // The two equations are decoupled once u is frozen.
    auto second = std::async(std::launch::async, solve_one, std::size_t{1});
    w[0] = solve_one(0);
    w[1] = second.get();
  } else {
    w[0] = solve_one(0);
    w[1] = solve_one(1);
  }
  return {fem::FemFunction(spec_->mesh, std::move(w[0])), fem::FemFunction(spec_->mesh, std::move(w[1]))};
}

FunctionPair apply_T(const ProblemSpec& spec, const ShiftConstants& shifts, const FunctionPair& u) {
  return MonotoneOperator(spec, shifts).apply(u);
}

double energy_bound(const ProblemSpec& spec, const OrderedInterval& J, double k) {
  const std::size_t n = spec.mesh->node_count();
  Vector U(n);
  for (std::size_t j = 0; j < n; ++j) {
    U[j] = std::max({std::abs(J.sub.first[j]), std::abs(J.sup.first[j]), std::abs(J.sub.second[j]),
                     std::abs(J.sup.second[j])});
  }
  const std::array<FunctionPair, 4> corners{
      J.sub, J.sup, FunctionPair{J.sub.first, J.sup.second}, FunctionPair{J.sup.first, J.sub.second}};
  double bound = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    Vector F(n, 0.0), G(n, 0.0);
    for (const auto& c : corners) {
      const Vector fv = order::interior_values(spec, i, c);
      const Vector gv = order::boundary_values(spec, i, c);
      for (std::size_t j = 0; j < n; ++j) {
        F[j] = std::max(F[j], std::abs(fv[j]));
        G[j] = std::max(G[j], std::abs(gv[j]));
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      F[j] += k * U[j];
      G[j] += k * U[j];
    }
    const double q = linalg::dot(U, spec.forms.mass * F) + linalg::dot(U, spec.forms.boundary_mass * G);
    bound = std::max(bound, std::sqrt(std::max(q, 0.0)));
  }
  return bound;
}

namespace {

enum class Sweep { Up, Down };

struct MonotonicityBreak {
  double violation;
  std::size_t step;
};

IterationResult run(const ProblemSpec& spec, const ShiftConstants& shifts, const OrderedInterval& J,
                    const IterationOptions& opts, Sweep sweep) {
  const MonotoneOperator T(spec, shifts, 1e-13, opts.concurrent_equations);
  IterationResult out{sweep == Sweep::Up ? J.sub : J.sup, {}, shifts};
  auto& trace = out.trace;
  trace.energy_bound = energy_bound(spec, J, shifts.k);

  FunctionPair u = out.limit;
  auto residual_norms = [&](const FunctionPair& p) {
    return std::array<double, 2>{linalg::norm_inf(order::residual(spec, 0, p)),
                                 linalg::norm_inf(order::residual(spec, 1, p))};
  };
  auto record_energy = [&](const FunctionPair& p) {
    trace.energy_norms.push_back(
        {fem::energy_norm(p.first, spec.forms, 0), fem::energy_norm(p.second, spec.forms, 1)});
  };
  if (opts.keep_snapshots) trace.snapshots.push_back(u);
  record_energy(u);
  trace.residuals.push_back(residual_norms(u));

  for (std::size_t n = 1; n <= opts.max_iter; ++n) {
    FunctionPair next = T.apply(u);

    std::array<double, 2> inc{};
    double wrong_way = 0.0;
    double outside = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < next[i].size(); ++j) {
        const double d = next[i][j] - u[i][j];
        inc[i] = std::max(inc[i], std::abs(d));
        wrong_way = std::max(wrong_way, sweep == Sweep::Up ? -d : d);
        outside = std::max({outside, J.sub[i][j] - next[i][j], next[i][j] - J.sup[i][j]});
      }
    }
    if (wrong_way > opts.monotonicity_abort) throw MonotonicityBreak{wrong_way, n};

    u = std::move(next);
    trace.increments.push_back(inc);
    trace.monotonicity_violations.push_back(wrong_way);
    trace.interval_violations.push_back(outside);
    if (opts.keep_snapshots) trace.snapshots.push_back(u);
    record_energy(u);
    trace.iterations = n;

    const auto r_now = residual_norms(u);
    trace.residuals.push_back(r_now);
    if (std::max(inc[0], inc[1]) < opts.tol && std::max(r_now[0], r_now[1]) < 10.0 * opts.tol) {
      trace.converged = true;
      break;
    }
  }
  out.limit = std::move(u);
  return out;
}

IterationResult run_with_retry(const ProblemSpec& spec, const ShiftConstants& shifts, const OrderedInterval& J,
                               const IterationOptions& opts, Sweep sweep) {
  try {
    return run(spec, shifts, J, opts, sweep);
  } catch (const MonotonicityBreak&) {
  }
  // The sampled shifts under-estimated the true slopes; try once more with
  // doubled shifts. If the estimate was zero, doubling alone would not change
  // anything, so bump it by one as well.
  ShiftConstants bigger = shifts.doubled();
  if (bigger.sum() == 0.0) bigger = make_shifts({1.0, 1.0}, {0.0, 0.0});
  try {
    auto result = run(spec, bigger, J, opts, sweep);
    result.trace.retried_with_doubled_shifts = true;
    return result;
  } catch (const MonotonicityBreak& b) {
    throw invariant_error(fmt::format(
        "{} sequence moved the wrong way by {:.3e} at step {} even with doubled shift constants; the sampled "
        "(A1)/(A2) shift estimate is too small or condition (Q) fails",
        sweep == Sweep::Up ? "minimal" : "maximal", b.violation, b.step));
  }
}

}  // namespace

IterationResult iterate_min(const ProblemSpec& spec, const ShiftConstants& shifts, const OrderedInterval& J,
                            const IterationOptions& opts) {
  return run_with_retry(spec, shifts, J, opts, Sweep::Up);
}

IterationResult iterate_max(const ProblemSpec& spec, const ShiftConstants& shifts, const OrderedInterval& J,
                            const IterationOptions& opts) {
  return run_with_retry(spec, shifts, J, opts, Sweep::Down);
}

}  // namespace semilin::monotone
