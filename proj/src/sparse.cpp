// SPDX-License-Identifier: Apache-2.0
#include "semilin/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/format.h>
#include <numeric>

#include "semilin/error.hpp"

namespace semilin::linalg {

SparseSym::SparseSym(std::size_t dim) : dim_(dim), row_offsets_(dim + 1, 0) {}

SparseSym SparseSym::from_triplets(std::size_t dim, std::span<const Triplet> triplets) {
  std::vector<Triplet> sorted(triplets.begin(), triplets.end());
  for (const auto& t : sorted) {
    if (t.row >= dim || t.col >= dim) {
      throw invalid_argument(fmt::format("triplet ({}, {}) out of range for dimension {}", t.row, t.col, dim));
    }
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseSym m(dim);
  m.col_indices_.reserve(sorted.size());
  m.values_.reserve(sorted.size());
  std::size_t row = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto& t = sorted[k];
    while (row < t.row) m.row_offsets_[++row] = m.col_indices_.size();
    const bool merge = k > 0 && sorted[k - 1].row == t.row && sorted[k - 1].col == t.col;
    if (merge) {
      m.values_.back() += t.value;
    } else {
      m.col_indices_.push_back(t.col);
      m.values_.push_back(t.value);
    }
  }
  while (row < dim) m.row_offsets_[++row] = m.col_indices_.size();

  const double scale = m.max_abs();
  if (m.asymmetry() > 1e-14 * scale) {
    throw invariant_error(fmt::format("assembled matrix is not symmetric (asymmetry {:.3e}, scale {:.3e})",
                                      m.asymmetry(), scale));
  }
  return m;
}

SparseSym SparseSym::identity(std::size_t dim) {
  std::vector<double> ones(dim, 1.0);
  return diagonal(ones);
}

SparseSym SparseSym::diagonal(std::span<const double> diag) {
  SparseSym m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    m.col_indices_.push_back(i);
    m.values_.push_back(diag[i]);
    m.row_offsets_[i + 1] = i + 1;
  }
  return m;
}

double SparseSym::at(std::size_t row, std::size_t col) const {
  const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
  const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

void SparseSym::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != dim_ || y.size() != dim_) {
    throw invalid_argument(fmt::format("matrix of dimension {} applied to vector of size {}", dim_, x.size()));
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) acc += values_[k] * x[col_indices_[k]];
    y[i] = acc;
  }
}

Vector SparseSym::operator*(std::span<const double> x) const {
  Vector y(dim_);
  multiply(x, y);
  return y;
}

Vector SparseSym::diagonal_entries() const {
  Vector d(dim_);
  for (std::size_t i = 0; i < dim_; ++i) d[i] = at(i, i);
  return d;
}

double SparseSym::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseSym::asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      worst = std::max(worst, std::abs(values_[k] - at(col_indices_[k], i)));
    }
  }
  return worst;
}

SparseSym SparseSym::combine(double alpha, const SparseSym& other, double beta) const {
  if (other.dim_ != dim_) throw invalid_argument("combining matrices of different dimension");
  SparseSym m(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    std::size_t a = row_offsets_[i];
    std::size_t b = other.row_offsets_[i];
    const std::size_t a_end = row_offsets_[i + 1];
    const std::size_t b_end = other.row_offsets_[i + 1];
    while (a < a_end || b < b_end) {
      const std::size_t ca = a < a_end ? col_indices_[a] : dim_;
      const std::size_t cb = b < b_end ? other.col_indices_[b] : dim_;
      if (ca == cb) {
        m.col_indices_.push_back(ca);
        m.values_.push_back(alpha * values_[a++] + beta * other.values_[b++]);
      } else if (ca < cb) {
        m.col_indices_.push_back(ca);
        m.values_.push_back(alpha * values_[a++]);
      } else {
        m.col_indices_.push_back(cb);
        m.values_.push_back(beta * other.values_[b++]);
      }
    }
    m.row_offsets_[i + 1] = m.col_indices_.size();
  }
  return m;
}

SparseSym SparseSym::scaled(double alpha) const {
  SparseSym m = *this;
  for (double& v : m.values_) v *= alpha;
  return m;
}

double SparseSym::bilinear(std::span<const double> x, std::span<const double> y) const {
  return dot(x, (*this) * y);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

CgResult cg_solve(const SparseSym& K, std::span<const double> b, double tol, std::size_t max_iter,
                  std::span<const double> x0) {
  const std::size_t n = K.dim();
  if (b.size() != n) throw invalid_argument(fmt::format("rhs of size {} for system of dimension {}", b.size(), n));
  for (double v : b) {
    if (!std::isfinite(v)) throw invalid_argument("non-finite right-hand side");
  }

  Vector inv_diag = K.diagonal_entries();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      throw invariant_error(fmt::format("matrix is not SPD: diagonal entry {} is {:.3e}", i, inv_diag[i]));
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  CgResult out;
  out.x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  const double b_norm = norm2(b);
  if (b_norm == 0.0) {
    std::fill(out.x.begin(), out.x.end(), 0.0);
    out.report = {0, 0.0, true};
    return out;
  }

  auto true_residual = [&] {
    Vector r(b.begin(), b.end());
    axpy(-1.0, K * out.x, r);
    return r;
  };
  // Rounding floor of ||b - Kx||: eps * || |K||x| + |b| ||.
  auto attainable = [&] {
    const auto offs = K.row_offsets();
    const auto cols = K.col_indices();
    const auto vals = K.values();
    Vector m(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = std::abs(b[i]);
      for (std::size_t k = offs[i]; k < offs[i + 1]; ++k) acc += std::abs(vals[k]) * std::abs(out.x[cols[k]]);
      m[i] = acc;
    }
    return 16.0 * std::numeric_limits<double>::epsilon() * norm2(m);
  };

  std::size_t it = 0;
  Vector r = true_residual();
  Vector z(n), p(n), q(n);
  // A few restarts from the true residual recover the accuracy that the
  // recursively updated residual loses.
  for (int restart = 0; restart < 4; ++restart) {
    double rel = norm2(r) / b_norm;
    if (rel <= tol) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (rel > tol && it < max_iter) {
      K.multiply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw invariant_error("matrix is not SPD: non-positive curvature in conjugate gradients");
      const double alpha = rz / pq;
      axpy(alpha, p, out.x);
      axpy(-alpha, q, r);
      ++it;
      rel = norm2(r) / b_norm;
      if (rel <= tol) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    r = true_residual();
    if (it >= max_iter || norm2(r) <= attainable()) break;
  }

  const double r_norm = norm2(r);
  out.report.iterations = it;
  out.report.final_relative_residual = r_norm / b_norm;
  out.report.converged = r_norm <= tol * b_norm || r_norm <= attainable();
  return out;
}

EigenResult inverse_power_generalized(const SparseSym& K, const SparseSym& B, double tol,
                                      std::size_t max_iter) {
  const std::size_t n = K.dim();
  if (B.dim() != n) throw invalid_argument("eigenproblem matrices differ in dimension");
  if (B.max_abs() == 0.0) throw invalid_argument("mass side of the eigenproblem is zero");

  const double inner_tol = 1e-14;
  const std::size_t inner_max = 20 * n + 100;

  auto b_normalize = [&](Vector& v) {
    const double bn = std::sqrt(B.bilinear(v, v));
    if (!(bn > 0.0)) throw invariant_error("iterate has zero B-norm; B is singular on the iteration subspace");
    for (double& x : v) x /= bn;
  };

  Vector phi(n, 1.0);
  b_normalize(phi);
  double mu = K.bilinear(phi, phi);
  EigenResult out;

  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Vector rhs = B * phi;
    auto solve = cg_solve(K, rhs, inner_tol, inner_max, phi);
    if (!solve.report.converged && solve.report.final_relative_residual > 1e-10) {
      throw convergence_error(fmt::format(
          "inner solve of the inverse iteration stalled at relative residual {:.3e}; K may be singular",
          solve.report.final_relative_residual));
    }
    phi = std::move(solve.x);
    b_normalize(phi);

    const Vector k_phi = K * phi;
    const Vector b_phi = B * phi;
    const double mu_next = dot(phi, k_phi);  // phi is B-normalised
    Vector res = k_phi;
    axpy(-mu_next, b_phi, res);
    // Normwise backward error; dividing by ||K phi|| instead leaves a rounding
    // floor that grows like the condition number.
    const double rel_res = norm2(res) / ((K.max_abs() + std::abs(mu_next) * B.max_abs()) * norm2(phi));
    const double increment = std::abs(mu_next - mu);
    mu = mu_next;

    out.report.iterations = it;
    out.report.final_relative_residual = rel_res;
    if (increment <= tol * std::abs(mu) && rel_res <= tol) {
      out.report.converged = true;
      break;
    }
  }

  const Vector ones(n, 1.0);
  if (B.bilinear(ones, phi) < 0.0) {
    for (double& v : phi) v = -v;
  }
  const double peak = *std::max_element(phi.begin(), phi.end());
  if (!(peak > 0.0)) throw invariant_error("eigenvector has no positive entry after sign fixing");
  for (double& v : phi) v /= peak;

  out.eigenvalue = mu;
  out.eigenvector = std::move(phi);
  return out;
}

}  // namespace semilin::linalg
