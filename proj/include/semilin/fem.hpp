// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "semilin/expr.hpp"
#include "semilin/sparse.hpp"

namespace semilin::fem {

using linalg::SparseSym;
using linalg::Vector;

using Point = std::array<double, 2>;  // y is 0 on 1D meshes

/// Simplicial mesh of (0,1) or (0,1)^2. Elements have dim+1 nodes, boundary
/// facets have dim nodes. 2D boundary edges are oriented counter-clockwise,
/// so the outward normal points to the right of each edge.
class Mesh {
 public:
  Mesh(int dimension, std::vector<Point> nodes, std::vector<std::size_t> element_nodes,
       std::vector<std::size_t> facet_nodes);

  int dimension() const noexcept { return dim_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t element_count() const noexcept { return element_nodes_.size() / nodes_per_element(); }
  std::size_t facet_count() const noexcept { return facet_nodes_.size() / nodes_per_facet(); }
  std::size_t nodes_per_element() const noexcept { return static_cast<std::size_t>(dim_) + 1; }
  std::size_t nodes_per_facet() const noexcept { return static_cast<std::size_t>(dim_); }

  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  std::span<const std::size_t> element(std::size_t e) const {
    return {element_nodes_.data() + e * nodes_per_element(), nodes_per_element()};
  }
  std::span<const std::size_t> facet(std::size_t f) const {
    return {facet_nodes_.data() + f * nodes_per_facet(), nodes_per_facet()};
  }
  /// Index of the element owning boundary facet f.
  std::size_t facet_element(std::size_t f) const { return facet_element_[f]; }

  /// Maximum element diameter.
  double h() const noexcept { return h_; }
  double element_measure(std::size_t e) const;
  double facet_measure(std::size_t f) const;
  double measure() const;
  double boundary_measure() const;

  const std::vector<bool>& boundary_node_mask() const noexcept { return on_boundary_; }

  /// True when every triangle has all angles <= 90 degrees (always true in
  /// 1D). P1 stiffness matrices on such meshes have nonpositive
  /// off-diagonal entries.
  bool is_nonobtuse() const;

 private:
  void validate();

  int dim_;
  std::vector<Point> nodes_;
  std::vector<std::size_t> element_nodes_;
  std::vector<std::size_t> facet_nodes_;
  std::vector<std::size_t> facet_element_;
  std::vector<bool> on_boundary_;
  double h_ = 0.0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform mesh of [0,1] with n elements.
MeshPtr unit_interval_mesh(std::size_t n);
/// n x n grid on [0,1]^2, every cell split along its lower-left to
/// upper-right diagonal.
MeshPtr unit_square_mesh(std::size_t n);

/// Nodal P1 coefficients on a mesh. Values are always finite.
class FemFunction {
 public:
  FemFunction(MeshPtr mesh, Vector values);
  static FemFunction constant(MeshPtr mesh, double value);
  /// Nodal interpolant of an expression in x, y (plus any `params`).
  static FemFunction interpolate(MeshPtr mesh, const expr::Expr& e, const expr::Bindings& params = {});

  const Mesh& mesh() const noexcept { return *mesh_; }
  const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
  const Vector& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

  double min() const;
  double max() const;

  FemFunction scaled(double alpha) const;

 private:
  MeshPtr mesh_;
  Vector values_;
};

/// Per-equation pair (u1, u2) on a common mesh.
struct FunctionPair {
  FemFunction first;
  FemFunction second;

  const FemFunction& operator[](std::size_t i) const { return i == 0 ? first : second; }
  FemFunction& operator[](std::size_t i) { return i == 0 ? first : second; }
};

/// Matrices of the bilinear forms grad.grad, uv, c_i uv and boundary uv.
struct AssembledForms {
  MeshPtr mesh;
  SparseSym stiffness;                    // A
  SparseSym mass;                         // M
  std::array<SparseSym, 2> weighted_mass; // Mc_1, Mc_2
  SparseSym boundary_mass;                // Mb
  std::array<double, 2> integral_c{};     // 1^T Mc_i 1
  std::array<SparseSym, 2> operators;     // A + Mc_i

  const SparseSym& operator_matrix(std::size_t i) const { return operators.at(i); }
};

/// Exact P1 stiffness, mass and boundary mass; Mc_i with c_i sampled at the
/// element midpoint/barycenter. A negative c_i sample throws Config
/// (condition (C) requires c_i >= 0). Elements are processed in a fixed
/// serial order, so results are bitwise reproducible.
AssembledForms assemble(MeshPtr mesh, const expr::Expr& c1, const expr::Expr& c2,
                        const expr::Bindings& params = {});

/// M f for nodal values of f.
Vector load_interior(const AssembledForms& forms, std::span<const double> nodal_f);
Vector load_interior(const AssembledForms& forms, const expr::Expr& f, const expr::Bindings& params = {});
/// Mb g; only boundary nodal values of g contribute.
Vector load_boundary(const AssembledForms& forms, std::span<const double> nodal_g);
Vector load_boundary(const AssembledForms& forms, const expr::Expr& g, const expr::Bindings& params = {});

/// sqrt(u^T (A + Mc_i) u)
double energy_norm(const FemFunction& u, const AssembledForms& forms, std::size_t i);

/// Bindings with x (and y) set to node j's coordinates, on top of `params`.
expr::Bindings node_bindings(const Mesh& mesh, std::size_t j, const expr::Bindings& params);

}  // namespace semilin::fem
