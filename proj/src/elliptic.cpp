// SPDX-License-Identifier: Apache-2.0
#include "semilin/elliptic.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "semilin/error.hpp"

namespace semilin::elliptic {

RobinSystem::RobinSystem(const AssembledForms& forms, double kappa, std::size_t equation)
    : forms_(&forms), kappa_(kappa), equation_(equation) {
  if (equation > 1) throw invalid_argument(fmt::format("equation index {} out of range", equation));
  if (!(kappa >= 0.0)) throw invalid_argument(fmt::format("Robin shift must be >= 0, got {}", kappa));
  if (kappa == 0.0 && !(forms.integral_c[equation] > 0.0)) {
    throw config_error(fmt::format(
        "singular Robin system: kappa = 0 and c{} integrates to zero (condition (C) requires c{} > 0 on a set "
        "of positive measure)",
        equation + 1, equation + 1));
  }
  matrix_ = forms.operator_matrix(equation);
  if (kappa > 0.0) matrix_ = matrix_.combine(1.0, forms.mass.combine(1.0, forms.boundary_mass, 1.0), kappa);
}

Vector RobinSystem::solve_assembled(std::span<const double> rhs, double tol, std::span<const double> x0) const {
  const std::size_t max_iter = 20 * matrix_.dim() + 200;
  auto result = linalg::cg_solve(matrix_, rhs, tol, max_iter, x0);
  if (!result.report.converged) {
    throw convergence_error(fmt::format("Robin solve for equation {} stalled after {} CG iterations at relative "
                                        "residual {:.3e} (requested {:.1e})",
                                        equation_ + 1, result.report.iterations,
                                        result.report.final_relative_residual, tol));
  }
  return std::move(result.x);
}

FemFunction solve_robin(const RobinSystem& sys, const FemFunction& f, std::span<const double> g, double tol) {
  const auto& forms = sys.forms();
  if (f.size() != forms.mesh->node_count() || g.size() != f.size()) {
    throw invalid_argument("solve_robin: data size does not match the mesh");
  }
  Vector rhs = fem::load_interior(forms, f.values());
  linalg::axpy(1.0, fem::load_boundary(forms, g), rhs);
  return {forms.mesh, sys.solve_assembled(rhs, tol)};
}

SteklovEigenpair steklov_first_eigenpair(const AssembledForms& forms, std::size_t equation, double tol,
                                         std::size_t max_iter) {
  if (equation > 1) throw invalid_argument(fmt::format("equation index {} out of range", equation));
  if (!(forms.integral_c[equation] > 0.0)) {
    throw config_error(fmt::format(
        "eigenproblem for equation {} is singular: c{} integrates to zero, violating condition (C)", equation + 1,
        equation + 1));
  }
  const auto K = forms.operator_matrix(equation);
  const auto B = forms.mass.combine(1.0, forms.boundary_mass, 1.0);
  auto eig = linalg::inverse_power_generalized(K, B, tol, max_iter);
  if (!eig.report.converged) {
    throw convergence_error(fmt::format("Steklov eigensolver for equation {} did not converge in {} iterations "
                                        "(residual {:.3e})",
                                        equation + 1, eig.report.iterations, eig.report.final_relative_residual));
  }
  if (!(eig.eigenvalue > 0.0)) {
    throw invariant_error(fmt::format("first Steklov eigenvalue {} is not positive", eig.eigenvalue));
  }
  const double worst = *std::min_element(eig.eigenvector.begin(), eig.eigenvector.end());
  if (worst < -1e-10) {
    throw invariant_error(fmt::format(
        "first Steklov eigenfunction for equation {} has a negative nodal value {:.3e}", equation + 1, worst));
  }
  return {eig.eigenvalue, FemFunction(forms.mesh, std::move(eig.eigenvector)), equation, eig.report};
}

AuxiliarySolution auxiliary_unit_solution(const AssembledForms& forms, std::size_t equation) {
  const RobinSystem sys(forms, 0.0, equation);
  const auto ones = FemFunction::constant(forms.mesh, 1.0);
  FemFunction phi = solve_robin(sys, ones, ones.values(), 1e-12);
  const double lowest = phi.min();
  if (!(lowest > 0.0)) {
    throw construction_error(fmt::format(
        "auxiliary solution for equation {} is not positive (min nodal value {:.3e})", equation + 1, lowest));
  }
  const double sup = phi.max();
  FemFunction normalized = phi.scaled(1.0 / sup);
  return {std::move(phi), sup, std::move(normalized)};
}

}  // namespace semilin::elliptic
