// SPDX-License-Identifier: Apache-2.0
#include "semilin/order.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "semilin/error.hpp"

namespace semilin::order {

namespace {

using expr::Var;

void require_vars(const expr::Expr& e, std::string_view name) {
  if (e.uses(Var::S)) {
    throw config_error(fmt::format("{} uses 's', which is only meaningful for single-variable nonlinearities", name));
  }
}

void require_same_mesh(const FunctionPair& a, const FunctionPair& b) {
  if (a.first.mesh_ptr() != b.first.mesh_ptr() || a.second.mesh_ptr() != b.second.mesh_ptr() ||
      a.first.mesh_ptr() != a.second.mesh_ptr()) {
    throw invalid_argument("function pairs live on different meshes");
  }
}

void require_on_mesh(const ProblemSpec& spec, const FunctionPair& u) {
  if (u.first.mesh_ptr() != spec.mesh || u.second.mesh_ptr() != spec.mesh) {
    throw invalid_argument("function pair does not live on the problem mesh");
  }
}

double eval_at(const ProblemSpec& spec, const expr::Expr& e, std::size_t j, double u1, double u2) {
  expr::Bindings b = spec.node_params[j];
  b.set(Var::U1, u1).set(Var::U2, u2);
  return e.eval(b);
}

FunctionPair nodal_combine(const FunctionPair& a, const FunctionPair& b, bool take_max) {
  require_same_mesh(a, b);
  FunctionPair out{a.first, a.second};
  for (std::size_t i = 0; i < 2; ++i) {
    Vector v(a[i].size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = take_max ? std::max(a[i][j], b[i][j]) : std::min(a[i][j], b[i][j]);
    out[i] = FemFunction(a[i].mesh_ptr(), std::move(v));
  }
  return out;
}

ResidualReport make_report(std::array<Vector, 2> residuals, double tau, Direction dir) {
  ResidualReport rep;
  rep.tolerance = tau;
  rep.direction = dir;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  for (const auto& r : residuals) {
    for (double v : r) rep.worst_violation = std::max(rep.worst_violation, dir == Direction::Sub ? v : -v);
  }
  rep.pass = rep.worst_violation <= tau;
  rep.residuals = std::move(residuals);
  return rep;
}

}  // namespace

ProblemSpec make_problem(fem::MeshPtr mesh, const expr::Expr& c1, const expr::Expr& c2, const expr::Expr& f1,
                         const expr::Expr& f2, const expr::Expr& g1, const expr::Expr& g2, double lambda) {
  require_vars(f1, "f1");
  require_vars(f2, "f2");
  require_vars(g1, "g1");
  require_vars(g2, "g2");
  for (const auto* c : {&c1, &c2}) {
    if (c->uses(Var::U1) || c->uses(Var::U2) || c->uses(Var::S)) {
      throw config_error(fmt::format("coefficient '{}' may only depend on x, y and lambda", c->to_string()));
    }
  }
  expr::Bindings params;
  params.set(Var::Lambda, lambda);
  ProblemSpec spec{mesh, fem::assemble(mesh, c1, c2, params), {c1, c2}, {f1, f2}, {g1, g2}, lambda, {}};
  spec.node_params.reserve(mesh->node_count());
  for (std::size_t j = 0; j < mesh->node_count(); ++j) spec.node_params.push_back(fem::node_bindings(*mesh, j, params));
  return spec;
}

Vector interior_values(const ProblemSpec& spec, std::size_t i, const FunctionPair& u) {
  require_on_mesh(spec, u);
  Vector out(u.first.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = eval_at(spec, spec.f.at(i), j, u.first[j], u.second[j]);
  return out;
}

Vector boundary_values(const ProblemSpec& spec, std::size_t i, const FunctionPair& u) {
  require_on_mesh(spec, u);
  const auto& mask = spec.mesh->boundary_node_mask();
  Vector out(u.first.size(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (mask[j]) out[j] = eval_at(spec, spec.g.at(i), j, u.first[j], u.second[j]);
  }
  return out;
}

Vector residual(const ProblemSpec& spec, std::size_t i, const FunctionPair& u) {
  Vector r = spec.forms.operator_matrix(i) * u[i].values();
  linalg::axpy(-1.0, fem::load_interior(spec.forms, interior_values(spec, i, u)), r);
  linalg::axpy(-1.0, fem::load_boundary(spec.forms, boundary_values(spec, i, u)), r);
  return r;
}

std::vector<std::string> check_quasimonotone(const ProblemSpec& spec,
                                             const std::array<std::pair<double, double>, 2>& box, std::size_t grid,
                                             double tol) {
  std::vector<std::string> warnings;
  const auto& nodes = spec.mesh->nodes();
  double xlo = nodes.front()[0], xhi = xlo, ylo = nodes.front()[1], yhi = ylo;
  for (const auto& p : nodes) {
    xlo = std::min(xlo, p[0]);
    xhi = std::max(xhi, p[0]);
    ylo = std::min(ylo, p[1]);
    yhi = std::max(yhi, p[1]);
  }
  std::vector<expr::SampleAxis> axes{expr::interval_axis(Var::X, xlo, xhi, grid),
                                     expr::interval_axis(Var::Y, ylo, yhi, grid),
                                     expr::interval_axis(Var::U1, box[0].first, box[0].second, grid),
                                     expr::interval_axis(Var::U2, box[1].first, box[1].second, grid)};
  expr::Bindings fixed;
  fixed.set(Var::Lambda, spec.lambda);

  for (std::size_t i = 0; i < 2; ++i) {
    const Var other = i == 0 ? Var::U2 : Var::U1;
    for (const auto& [name, e] : {std::pair{"f", &spec.f[i]}, std::pair{"g", &spec.g[i]}}) {
      const auto slopes = expr::sampled_partial(*e, other, axes, fixed);
      if (slopes.min_slope < -tol) {
        warnings.push_back(fmt::format(
            "condition (Q) violated on the sampled box: d{}{}/d{} reaches {:.3e} < 0", name, i + 1,
            expr::var_name(other), slopes.min_slope));
      }
    }
  }
  return warnings;
}

double h_scaled_tolerance(const ProblemSpec& spec, const FunctionPair& u, double tau_abs) {
  double scale = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    scale = std::max(scale, linalg::norm_inf(fem::load_interior(spec.forms, interior_values(spec, i, u))));
    scale = std::max(scale, linalg::norm_inf(fem::load_boundary(spec.forms, boundary_values(spec, i, u))));
  }
  return tau_abs + 10.0 * spec.mesh->h() * scale;
}

ResidualReport verify_sub(const ProblemSpec& spec, const FunctionPair& u, double tau) {
  return make_report({residual(spec, 0, u), residual(spec, 1, u)}, tau, Direction::Sub);
}

ResidualReport verify_super(const ProblemSpec& spec, const FunctionPair& u, double tau) {
  return make_report({residual(spec, 0, u), residual(spec, 1, u)}, tau, Direction::Super);
}

OrderedInterval make_interval(const ProblemSpec& spec, FunctionPair sub, FunctionPair sup, std::optional<double> tau) {
  require_on_mesh(spec, sub);
  require_on_mesh(spec, sup);
  const double gap = order_violation(sub, sup);
  if (gap > 0.0) {
    throw construction_error(fmt::format("subsolution exceeds supersolution by {:.3e} at some node", gap));
  }
  const double tau_sub = tau.value_or(h_scaled_tolerance(spec, sub));
  const double tau_sup = tau.value_or(h_scaled_tolerance(spec, sup));
  const auto rs = verify_sub(spec, sub, tau_sub);
  if (!rs.pass) {
    throw construction_error(
        fmt::format("lower pair is not a subsolution: violation {:.3e} > tolerance {:.3e}", rs.worst_violation, tau_sub));
  }
  const auto rp = verify_super(spec, sup, tau_sup);
  if (!rp.pass) {
    throw construction_error(fmt::format("upper pair is not a supersolution: violation {:.3e} > tolerance {:.3e}",
                                         rp.worst_violation, tau_sup));
  }
  return {std::move(sub), std::move(sup), tau_sub, tau_sup};
}

FunctionPair lattice_max(const FunctionPair& a, const FunctionPair& b) { return nodal_combine(a, b, true); }
FunctionPair lattice_min(const FunctionPair& a, const FunctionPair& b) { return nodal_combine(a, b, false); }

double order_violation(const FunctionPair& a, const FunctionPair& b) {
  require_same_mesh(a, b);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, a[i][j] - b[i][j]);
  }
  return worst;
}

bool ordered(const FunctionPair& a, const FunctionPair& b, double tol) { return order_violation(a, b) <= tol; }

CompositeLoad composite_load(const ProblemSpec& spec, const FunctionPair& a, const FunctionPair& b, LatticeMode mode) {
  require_same_mesh(a, b);
  require_on_mesh(spec, a);
  const bool take_max = mode == LatticeMode::Max;
  CompositeLoad out{nodal_combine(a, b, take_max), {}, {}, {}, {}, {}};
  const auto& gamma = out.gamma;
  const auto& mask = spec.mesh->boundary_node_mask();
  const std::size_t n = a.first.size();

  for (std::size_t i = 0; i < 2; ++i) {
    out.interior_nodal[i].assign(n, 0.0);
    out.boundary_nodal[i].assign(n, 0.0);
    out.from_a[i].assign(n, false);
    for (std::size_t j = 0; j < n; ++j) {
      // Strict comparison: ties go to b, as in the piecewise definition.
      const bool pick_a = take_max ? a[i][j] > b[i][j] : a[i][j] < b[i][j];
      const double own = pick_a ? a[i][j] : b[i][j];
      const double u1 = i == 0 ? own : gamma.first[j];
      const double u2 = i == 0 ? gamma.second[j] : own;
      out.from_a[i][j] = pick_a;
      out.interior_nodal[i][j] = eval_at(spec, spec.f[i], j, u1, u2);
      if (mask[j]) out.boundary_nodal[i][j] = eval_at(spec, spec.g[i], j, u1, u2);
    }
    out.interior[i] = fem::load_interior(spec.forms, out.interior_nodal[i]);
    out.boundary[i] = fem::load_boundary(spec.forms, out.boundary_nodal[i]);
  }
  return out;
}

ResidualReport kato_check(const ProblemSpec& spec, const FunctionPair& a, const FunctionPair& b, double tau,
                          LatticeMode mode) {
  const bool sub = mode == LatticeMode::Max;
  for (const auto* p : {&a, &b}) {
    const auto pre = sub ? verify_sub(spec, *p, tau) : verify_super(spec, *p, tau);
    if (!pre.pass) {
      throw invalid_argument(fmt::format("kato_check: an input pair is not a {} (violation {:.3e} > {:.3e})",
                                         sub ? "subsolution" : "supersolution", pre.worst_violation, tau));
    }
  }
  const auto load = composite_load(spec, a, b, mode);
  std::array<Vector, 2> res;
  for (std::size_t i = 0; i < 2; ++i) {
    res[i] = spec.forms.operator_matrix(i) * load.gamma[i].values();
    linalg::axpy(-1.0, load.interior[i], res[i]);
    linalg::axpy(-1.0, load.boundary[i], res[i]);
  }
  auto report = make_report(std::move(res), tau, sub ? Direction::Sub : Direction::Super);
  if (!spec.mesh->is_nonobtuse()) {
    report.warnings.push_back(
        "mesh has obtuse triangles; the discrete comparison principle behind the lattice check may fail for "
        "geometric reasons");
  }
  return report;
}

}  // namespace semilin::order
