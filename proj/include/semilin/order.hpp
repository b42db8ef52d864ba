// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "semilin/expr.hpp"
#include "semilin/fem.hpp"

namespace semilin::order {

using fem::AssembledForms;
using fem::FemFunction;
using fem::FunctionPair;
using linalg::Vector;

/// Data of the coupled system
///
///   -Lap u_i + c_i(x) u_i = f_i(x, u1, u2)   in Omega,
///   du_i/dn             = g_i(x, u1, u2)   on the boundary,   i = 1, 2.
///
/// Expressions may use x, y, u1, u2 and lambda.
struct ProblemSpec {
  fem::MeshPtr mesh;
  AssembledForms forms;
  std::array<expr::Expr, 2> c;
  std::array<expr::Expr, 2> f;
  std::array<expr::Expr, 2> g;
  double lambda = 0.0;
  /// Per-node bindings of x, y and lambda.
  std::vector<expr::Bindings> node_params;
};

/// Assembles the forms and binds lambda. Throws Config when an expression uses
/// a variable outside {x, y, u1, u2, lambda}.
ProblemSpec make_problem(fem::MeshPtr mesh, const expr::Expr& c1, const expr::Expr& c2, const expr::Expr& f1,
                         const expr::Expr& f2, const expr::Expr& g1, const expr::Expr& g2, double lambda);

/// f_i(x_j, u1_j, u2_j) at every node.
Vector interior_values(const ProblemSpec& spec, std::size_t i, const FunctionPair& u);
/// g_i at boundary nodes; zero elsewhere.
Vector boundary_values(const ProblemSpec& spec, std::size_t i, const FunctionPair& u);

/// r_i = (A + Mc_i) u_i - M f_i(u) - Mb g_i(u); the i-th discrete residual.
Vector residual(const ProblemSpec& spec, std::size_t i, const FunctionPair& u);

/// Worst violation of the sampled quasimonotonicity condition: each f_i, g_i
/// must be nondecreasing in the *other* component. Returns human-readable
/// warnings for slopes below -tol on the box; empty when the condition holds.
std::vector<std::string> check_quasimonotone(const ProblemSpec& spec, const std::array<std::pair<double, double>, 2>& box,
                                             std::size_t grid = 9, double tol = 1e-8);

enum class Direction { Sub, Super };

struct ResidualReport {
  std::array<Vector, 2> residuals;
  /// Sub: max_j r_ij; Super: max_j -r_ij. Positive means the inequality is
  /// violated by that much.
  double worst_violation = 0.0;
  bool pass = false;
  double tolerance = 0.0;
  Direction direction = Direction::Sub;
  std::vector<std::string> warnings;
};

/// tau_abs + 10 h max(||M f(u)||_inf, ||Mb g(u)||_inf) over both equations.
/// The max of two P1 functions is not P1, so lattice checks carry an O(h)
/// interpolation defect that this absorbs.
double h_scaled_tolerance(const ProblemSpec& spec, const FunctionPair& u, double tau_abs = 1e-10);

/// Discrete subsolution test against every (nonnegative) hat function.
ResidualReport verify_sub(const ProblemSpec& spec, const FunctionPair& u, double tau);
/// Discrete supersolution test, the mirror image of verify_sub.
ResidualReport verify_super(const ProblemSpec& spec, const FunctionPair& u, double tau);

/// Nodal, componentwise max/min. Throws InvalidArgument on mesh mismatch.
FunctionPair lattice_max(const FunctionPair& a, const FunctionPair& b);
FunctionPair lattice_min(const FunctionPair& a, const FunctionPair& b);

/// True when a <= b + tol nodally in both components.
bool ordered(const FunctionPair& a, const FunctionPair& b, double tol = 0.0);
/// max_j (a_ij - b_ij) over both components; <= 0 when a <= b.
double order_violation(const FunctionPair& a, const FunctionPair& b);

/// A verified ordered pair sub <= sup; the box J between them.
struct OrderedInterval {
  FunctionPair sub;
  FunctionPair sup;
  double sub_tolerance = 0.0;
  double sup_tolerance = 0.0;
};

/// Checks sub <= sup nodally, verify_sub(sub) and verify_super(sup); throws
/// Construction with the failing report otherwise. Tolerances default to the
/// h-scaled policy evaluated at each pair.
OrderedInterval make_interval(const ProblemSpec& spec, FunctionPair sub, FunctionPair sup,
                              std::optional<double> tau = std::nullopt);

enum class LatticeMode { Max, Min };

/// Piecewise right-hand sides of the Kato inequality for systems. For
/// mode Max with gamma = lattice_max(a, b):
///   h_1 = f_1(x, a_1, gamma_2) where a_1 > b_1, else f_1(x, b_1, gamma_2),
///   h_2 = f_2(x, gamma_1, a_2) where a_2 > b_2, else f_2(x, gamma_1, b_2),
/// and the boundary analogues with g. Mode Min uses lattice_min and selects
/// the smaller component.
struct CompositeLoad {
  FunctionPair gamma;
  std::array<Vector, 2> interior_nodal;  // h_i at nodes
  std::array<Vector, 2> boundary_nodal;  // h~_i at boundary nodes, 0 elsewhere
  std::array<Vector, 2> interior;        // M h_i
  std::array<Vector, 2> boundary;        // Mb h~_i
  /// true where pair a supplied the selected component.
  std::array<std::vector<bool>, 2> from_a;
};

CompositeLoad composite_load(const ProblemSpec& spec, const FunctionPair& a, const FunctionPair& b, LatticeMode mode);

/// Kato check for systems. Max: both inputs must pass verify_sub at `tau`;
/// gamma = lattice_max is checked as a subsolution against the composite
/// load. Min: the mirror statement for supersolutions. Emits a warning on
/// meshes without the M-matrix property, where the discrete comparison can
/// fail for geometric reasons.
ResidualReport kato_check(const ProblemSpec& spec, const FunctionPair& a, const FunctionPair& b, double tau,
                          LatticeMode mode = LatticeMode::Max);

}  // namespace semilin::order
