// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace semilin::linalg {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric sparse matrix in compressed row storage. Both triangles are
/// stored; column indices are sorted and unique within each row.
class SparseSym {
 public:
  SparseSym() = default;
  explicit SparseSym(std::size_t dim);

  /// Sums duplicate (row, col) entries. Throws if the result is not
  /// symmetric within 1e-14 relative to the largest entry.
  static SparseSym from_triplets(std::size_t dim, std::span<const Triplet> triplets);
  static SparseSym identity(std::size_t dim);
  static SparseSym diagonal(std::span<const double> diag);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Entry lookup by binary search; zero when structurally absent.
  double at(std::size_t row, std::size_t col) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;

  Vector diagonal_entries() const;
  double max_abs() const;
  /// max |K_ij - K_ji|
  double asymmetry() const;

  /// alpha*this + beta*other over the union of both patterns.
  SparseSym combine(double alpha, const SparseSym& other, double beta) const;
  SparseSym scaled(double alpha) const;

  /// x^T K y
  double bilinear(std::span<const double> x, std::span<const double> y) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct SolveReport {
  std::size_t iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
};

struct CgResult {
  Vector x;
  SolveReport report;
};

/// Jacobi-preconditioned conjugate gradients for SPD K. Stops once the true
/// residual satisfies ||Kx - b||_2 <= tol * ||b||_2, or once it reaches the
/// rounding floor 16 eps || |K||x| + |b| ||_2 when tol asks for more than
/// double precision can give. A non-positive diagonal entry throws
/// InvariantViolation (matrix not SPD). Running out of iterations is
/// reported through `report.converged`, not thrown.
CgResult cg_solve(const SparseSym& K, std::span<const double> b, double tol, std::size_t max_iter,
                  std::span<const double> x0 = {});

struct EigenResult {
  double eigenvalue = 0.0;
  Vector eigenvector;
  SolveReport report;
};

/// Smallest eigenpair of K phi = mu B phi by inverse power iteration with
/// B-normalisation. K must be SPD and B symmetric positive semidefinite,
/// B != 0. The returned vector is sign-fixed so that its B-weighted mean is
/// positive and scaled so that max_j phi_j = 1. Converged once the change of
/// the Rayleigh quotient between sweeps (relative to |mu|) and the backward
/// error ||K phi - mu B phi|| / ((max|K| + |mu| max|B|) ||phi||) are both
/// at most `tol`.
EigenResult inverse_power_generalized(const SparseSym& K, const SparseSym& B, double tol,
                                      std::size_t max_iter);

}  // namespace semilin::linalg
