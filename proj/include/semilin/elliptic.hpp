// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "semilin/fem.hpp"

namespace semilin::elliptic {

using fem::AssembledForms;
using fem::FemFunction;
using linalg::Vector;

/// Shifted Robin problem for equation i:
///
///   -Lap w + c_i w + kappa w = f   in Omega,
///   dw/dn + kappa w = g            on the boundary,
///
/// discretised as K_i w = M f + Mb g with K_i = A + Mc_i + kappa (M + Mb).
class RobinSystem {
 public:
  /// Throws Config when kappa = 0 and the integral of c_i vanishes (K_i is
  /// then singular; condition (C) requires c_i to be nonzero somewhere).
  RobinSystem(const AssembledForms& forms, double kappa, std::size_t equation);

  const AssembledForms& forms() const noexcept { return *forms_; }
  double kappa() const noexcept { return kappa_; }
  std::size_t equation() const noexcept { return equation_; }
  const linalg::SparseSym& matrix() const noexcept { return matrix_; }

  /// Solve K_i w = rhs for an already assembled right-hand side.
  Vector solve_assembled(std::span<const double> rhs, double tol = 1e-10, std::span<const double> x0 = {}) const;

 private:
  const AssembledForms* forms_;
  double kappa_;
  std::size_t equation_;
  linalg::SparseSym matrix_;
};

/// w with K_i w = M f + Mb g, to relative residual `tol`. `g` holds nodal
/// values; only boundary nodes contribute.
FemFunction solve_robin(const RobinSystem& sys, const FemFunction& f, std::span<const double> g, double tol = 1e-10);

/// First eigenpair of -Lap phi + c_i phi = mu phi in Omega, dphi/dn = mu phi
/// on the boundary; discretely (A + Mc_i) phi = mu (M + Mb) phi.
struct SteklovEigenpair {
  double mu = 0.0;
  FemFunction phi;  // max phi = 1, phi >= -1e-10 nodally
  std::size_t equation = 0;
  linalg::SolveReport report;
};

SteklovEigenpair steklov_first_eigenpair(const AssembledForms& forms, std::size_t equation, double tol = 1e-12,
                                         std::size_t max_iter = 1000);

/// Solution of -Lap phi + c_i phi = 1, dphi/dn = 1, with its sup norm and
/// the normalised phi* = phi / ||phi||_inf.
struct AuxiliarySolution {
  FemFunction phi;
  double sup_norm = 0.0;
  FemFunction normalized;
};

AuxiliarySolution auxiliary_unit_solution(const AssembledForms& forms, std::size_t equation);

}  // namespace semilin::elliptic
