// SPDX-License-Identifier: Apache-2.0
#include "semilin/example51.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <future>
#include <vector>

#include "semilin/error.hpp"

namespace semilin::example51 {

namespace {

using expr::Var;

constexpr const char* kNames[2][2] = {{"f1", "f2"}, {"g1", "g2"}};

double eval_s(const Expr& e, double lambda, double s) {
  expr::Bindings b;
  b.set(Var::S, s).set(Var::Lambda, lambda);
  return e.eval(b);
}

/// Points 10^(lo + k/per_decade) for k = 0 .. (hi - lo) * per_decade.
std::vector<double> geometric(int lo_exp, int hi_exp, int per_decade) {
  std::vector<double> out;
  for (int k = 0; k <= (hi_exp - lo_exp) * per_decade; ++k) {
    out.push_back(std::pow(10.0, lo_exp + static_cast<double>(k) / per_decade));
  }
  return out;
}

/// Bisection between a point where `pred` holds and one where it does not;
/// returns the final bracket {holds, fails}.
std::pair<double, double> bisect(const std::function<bool(double)>& pred, double holds, double fails) {
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (holds + fails);
    if (mid == holds || mid == fails) break;
    (pred(mid) ? holds : fails) = mid;
  }
  return {holds, fails};
}

double eval_named(const Expr& e, const char* name, double lambda, double s) {
  try {
    return eval_s(e, lambda, s);
  } catch (const Error& err) {
    throw config_error(fmt::format("example51: cannot evaluate {} at s = {:g}: {}", name, s, err.what()));
  }
}

FunctionPair scaled_pair(const fem::FemFunction& p1, double s1, const fem::FemFunction& p2, double s2) {
  return {p1.scaled(s1), p2.scaled(s2)};
}

}  // namespace

Example51Config make_config(fem::MeshPtr mesh, double lambda, std::array<Expr, 2> f, std::array<Expr, 2> g,
                            std::array<Expr, 2> c) {
  const Expr lam = Expr::variable(Var::Lambda);
  for (auto* arr : {&f, &g}) {
    for (auto& e : *arr) {
      if (!e.uses(Var::Lambda)) e = lam * e;
    }
  }
  Example51Config cfg;
  cfg.lambda = lambda;
  cfg.f = std::move(f);
  cfg.g = std::move(g);
  cfg.c = std::move(c);
  cfg.mesh = std::move(mesh);
  return cfg;
}

double derivative_at_zero(const Expr& e, double lambda, double h) {
  const double f0 = eval_s(e, lambda, 0.0);
  const double d1 = (eval_s(e, lambda, h) - f0) / h;
  const double d2 = (eval_s(e, lambda, 2.0 * h) - f0) / (2.0 * h);
  return 2.0 * d1 - d2;
}

void validate(const Example51Config& cfg) {
  if (!cfg.mesh) throw config_error("example51: no mesh");
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) {
    throw config_error(fmt::format("example51: lambda must be positive and finite, got {}", cfg.lambda));
  }
  if (cfg.epsilon && !(*cfg.epsilon > 0.0)) throw config_error("example51: epsilon must be positive");
  if (cfg.m_tilde && !(*cfg.m_tilde > 0.0)) throw config_error("example51: M~ must be positive");
  for (const auto& c : cfg.c) {
    if (c.uses(Var::U1) || c.uses(Var::U2) || c.uses(Var::S)) {
      throw config_error(fmt::format("example51: coefficient '{}' may only depend on x, y", c.to_string()));
    }
  }

  std::vector<double> grid{0.0};
  for (double s : geometric(-8, 6, 10)) grid.push_back(s);

  for (int kind = 0; kind < 2; ++kind) {
    for (std::size_t i = 0; i < 2; ++i) {
      const Expr& e = kind == 0 ? cfg.f[i] : cfg.g[i];
      const char* name = kNames[kind][i];
      for (Var v : {Var::X, Var::Y, Var::U1, Var::U2}) {
        if (e.uses(v)) {
          throw config_error(fmt::format("example51: {} must be a function of s only, but uses '{}'", name,
                                         expr::var_name(v)));
        }
      }
      const double at0 = eval_named(e, name, cfg.lambda, 0.0);
      if (std::abs(at0) > 1e-12) throw config_error(fmt::format("example51: {}(0) = {} but must vanish", name, at0));
      const double slope0 = derivative_at_zero(e, cfg.lambda) / cfg.lambda;
      if (!(slope0 > 1e-12)) {
        throw config_error(fmt::format(
            "example51: {}'(0) = {} must be positive (otherwise a or b vanishes and the threshold is infinite)",
            name, slope0));
      }
      double prev = at0;
      for (double s : grid) {
        const double v = eval_named(e, name, cfg.lambda, s);
        if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
          throw config_error(fmt::format("example51: {} decreases near s = {:.6g}", name, s));
        }
        prev = v;
      }
      const double ratio = eval_named(e, name, cfg.lambda, kSublinearProbe) / cfg.lambda / kSublinearProbe;
      if (ratio > 1e-2 * slope0) {
        throw config_error(fmt::format(
            "example51: {} fails the sublinearity probe: {}(s)/s = {:.6g} at s = {:g}, not small against {}'(0) = {:.6g}",
            name, name, ratio, kSublinearProbe, name, slope0));
      }
    }
  }
}

std::optional<double> find_delta(const std::array<Expr, 2>& f, const std::array<Expr, 2>& g, double lambda,
                                 const XiSlopes& slopes) {
  auto all_negative = [&](double s) {
    const double l1 = slopes.slope1 * s;
    const double l2 = slopes.slope2 * s;
    return l1 - eval_s(f[0], lambda, s) < 0.0 && l1 - eval_s(g[0], lambda, s) < 0.0 &&
           l2 - eval_s(f[1], lambda, s) < 0.0 && l2 - eval_s(g[1], lambda, s) < 0.0;
  };
  const auto grid = geometric(-8, 8, 20);
  if (!all_negative(grid.front())) return std::nullopt;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!all_negative(grid[k])) return bisect(all_negative, grid[k - 1], grid[k]).first;
  }
  return grid.back();
}

ProblemSpec make_spec(const Example51Config& cfg) {
  const Expr u1 = Expr::variable(Var::U1);
  const Expr u2 = Expr::variable(Var::U2);
  return order::make_problem(cfg.mesh, cfg.c[0], cfg.c[1], expr::substitute(cfg.f[0], Var::S, u2),
                             expr::substitute(cfg.f[1], Var::S, u1), expr::substitute(cfg.g[0], Var::S, u2),
                             expr::substitute(cfg.g[1], Var::S, u1), cfg.lambda);
}

Construct51 build_construct(const Example51Config& cfg) {
  validate(cfg);
  ProblemSpec spec = make_spec(cfg);
  const double lambda = cfg.lambda;

  auto eigen = [&](std::size_t i) { return elliptic::steklov_first_eigenpair(spec.forms, i); };
  auto aux = [&](std::size_t i) { return elliptic::auxiliary_unit_solution(spec.forms, i); };
  std::optional<elliptic::SteklovEigenpair> e0, e1;
  std::optional<elliptic::AuxiliarySolution> a0, a1;
  if (cfg.concurrent) {
    auto fe1 = std::async(std::launch::async, eigen, std::size_t{1});
    auto fa0 = std::async(std::launch::async, aux, std::size_t{0});
    auto fa1 = std::async(std::launch::async, aux, std::size_t{1});
    e0.emplace(eigen(0));
    e1.emplace(fe1.get());
    a0.emplace(fa0.get());
    a1.emplace(fa1.get());
  } else {
    e0.emplace(eigen(0));
    e1.emplace(eigen(1));
    a0.emplace(aux(0));
    a1.emplace(aux(1));
  }
  const auto& phi1 = e0->phi;
  const auto& phi2 = e1->phi;

  const double a = std::sqrt(std::min(derivative_at_zero(cfg.f[0], lambda), derivative_at_zero(cfg.g[0], lambda)) / lambda);
  const double b = std::sqrt(std::min(derivative_at_zero(cfg.f[1], lambda), derivative_at_zero(cfg.g[1], lambda)) / lambda);

  double C1 = 0.0, C2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < phi1.size(); ++j) {
    if (!(phi1[j] > 0.0) || !(phi2[j] > 0.0)) {
      throw construction_error(fmt::format(
          "first eigenfunctions must be positive, but phi1 = {:.3e}, phi2 = {:.3e} at node {}", phi1[j], phi2[j], j));
    }
    const double r = phi1[j] / phi2[j];
    C1 = std::max(C1, r);
    C2 = std::min(C2, r);
  }

  const double mu1 = e0->mu, mu2 = e1->mu;
  const double threshold = std::max(mu1 * C1 / (a * b), mu2 / (a * b * C2));
  if (!(lambda > threshold)) {
    throw construction_error(fmt::format(
        "lambda = {} does not exceed the threshold max(mu1*C1/(a*b), mu2/(a*b*C2)) = {} "
        "(mu1 = {}, mu2 = {}, a = {}, b = {}, C1 = {}, C2 = {})",
        lambda, threshold, mu1, mu2, a, b, C1, C2));
  }

  const XiSlopes slopes{mu1 * C1 * a / b, mu2 * b / (C2 * a)};
  const auto delta = find_delta(cfg.f, cfg.g, lambda, slopes);
  if (!delta) {
    throw construction_error(fmt::format("no delta > 0 with xi_1, xi~_1, xi_2, xi~_2 < 0 on (0, delta) at lambda = {}",
                                         lambda));
  }

  const double cap = std::max(a * phi1.max(), b * phi2.max());
  const double epsilon = cfg.epsilon.value_or(0.5 * *delta / cap);

  const double sup1 = a0->sup_norm, sup2 = a1->sup_norm;
  const double ordering = std::max(a * epsilon * phi1.max() / a0->normalized.min(),
                                   b * epsilon * phi2.max() / a1->normalized.min());
  // Sampled running max of f_i, g_i on [0, M] against M / ||phi_i||.
  const auto mgrid = geometric(-8, 12, 20);
  auto super_ok = [&](double M) {
    for (std::size_t i = 0; i < 2; ++i) {
      const double limit = M / (i == 0 ? sup1 : sup2);
      double fmax = 0.0, gmax = 0.0;
      for (double s : mgrid) {
        if (s > M) break;
        fmax = std::max(fmax, eval_s(cfg.f[i], lambda, s));
        gmax = std::max(gmax, eval_s(cfg.g[i], lambda, s));
      }
      fmax = std::max(fmax, eval_s(cfg.f[i], lambda, M));
      gmax = std::max(gmax, eval_s(cfg.g[i], lambda, M));
      if (!(fmax < limit && gmax < limit)) return false;
    }
    return true;
  };
  std::optional<std::size_t> last_fail;
  for (std::size_t k = 0; k < mgrid.size(); ++k) {
    if (!super_ok(mgrid[k])) last_fail = k;
  }
  double super_bound = mgrid.front();
  if (last_fail) {
    if (*last_fail + 1 == mgrid.size()) {
      throw construction_error(fmt::format("no M~ <= {:g} satisfies lambda f_i(M~) < M~/||phi_i||", mgrid.back()));
    }
    super_bound = bisect([&](double M) { return !super_ok(M); }, mgrid[*last_fail], mgrid[*last_fail + 1]).second;
  }
  const double m_lower = std::max(ordering, super_bound);
  if (cfg.m_tilde && !(*cfg.m_tilde > m_lower)) {
    throw construction_error(fmt::format("M~ = {} is not above its lower bound {}", *cfg.m_tilde, m_lower));
  }
  const double m_tilde = cfg.m_tilde.value_or(2.0 * m_lower);

  auto sub = scaled_pair(phi1, a * epsilon, phi2, b * epsilon);
  auto sup = scaled_pair(a0->normalized, m_tilde, a1->normalized, m_tilde);
  auto interval = order::make_interval(spec, std::move(sub), std::move(sup));

  return Construct51{{std::move(*e0), std::move(*e1)},
                     {std::move(*a0), std::move(*a1)},
                     a,
                     b,
                     C1,
                     C2,
                     threshold,
                     *delta,
                     epsilon,
                     m_lower,
                     m_tilde,
                     std::move(spec),
                     std::move(interval)};
}

Example51Run run_example(const Example51Config& cfg, const monotone::IterationOptions& opts) {
  Construct51 construct = build_construct(cfg);
  const auto shifts = monotone::estimate_shifts(construct.spec, construct.interval);
  auto lo = monotone::iterate_min(construct.spec, shifts, construct.interval, opts);
  auto hi = monotone::iterate_max(construct.spec, shifts, construct.interval, opts);
  for (const auto* r : {&lo, &hi}) {
    const double m = std::min(r->limit.first.min(), r->limit.second.min());
    if (!(m > 0.0)) throw invariant_error(fmt::format("computed solution is not positive (min nodal value {})", m));
  }
  return {std::move(construct), shifts, std::move(lo), std::move(hi)};
}

}  // namespace semilin::example51
