// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "semilin/error.hpp"
#include "semilin/fem.hpp"
#include "support.hpp"

using namespace semilin;
using namespace semilin::fem;
using semilin::testing::ex;

namespace {

double total(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void expect_matrix(const SparseSym& K, const std::vector<std::vector<double>>& dense, double tol) {
  ASSERT_EQ(K.dim(), dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i)
    for (std::size_t j = 0; j < dense.size(); ++j) EXPECT_NEAR(K.at(i, j), dense[i][j], tol) << i << "," << j;
}

}  // namespace

TEST(Mesh, IntervalCounts) {
  const auto m2 = unit_interval_mesh(2);
  ASSERT_EQ(m2->node_count(), 3u);
  EXPECT_EQ(m2->nodes()[1][0], 0.5);
  EXPECT_EQ(m2->element_count(), 2u);
  EXPECT_EQ(m2->facet_count(), 2u);

  const auto m1 = unit_interval_mesh(1);
  EXPECT_EQ(m1->node_count(), 2u);
  EXPECT_EQ(m1->element_count(), 1u);

  EXPECT_DOUBLE_EQ(unit_interval_mesh(256)->h(), 1.0 / 256.0);
  EXPECT_THROW(unit_interval_mesh(0), Error);
}

TEST(Mesh, SquareCounts) {
  struct Case {
    std::size_t n, nodes, tris, edges;
  };
  for (const auto& c : {Case{1, 4, 2, 4}, Case{2, 9, 8, 8}, Case{4, 25, 32, 16}}) {
    const auto m = unit_square_mesh(c.n);
    EXPECT_EQ(m->node_count(), c.nodes);
    EXPECT_EQ(m->element_count(), c.tris);
    EXPECT_EQ(m->facet_count(), c.edges);
    EXPECT_NEAR(m->h(), std::sqrt(2.0) / static_cast<double>(c.n), 1e-15);
    EXPECT_NEAR(m->measure(), 1.0, 1e-14);
    EXPECT_NEAR(m->boundary_measure(), 4.0, 1e-14);
    EXPECT_TRUE(m->is_nonobtuse());
  }
  EXPECT_THROW(unit_square_mesh(0), Error);
}

TEST(Mesh, SquareDiagonalRunsLowerLeftToUpperRight) {
  const auto m = unit_square_mesh(1);
  // both triangles contain node 0 = (0,0) and node 3 = (1,1)
  for (std::size_t e = 0; e < 2; ++e) {
    const auto el = m->element(e);
    int hits = 0;
    for (auto v : el) {
      const auto& p = m->nodes()[v];
      if ((p[0] == 0.0 && p[1] == 0.0) || (p[0] == 1.0 && p[1] == 1.0)) ++hits;
    }
    EXPECT_EQ(hits, 2);
  }
}

TEST(Assemble, IntervalClosedForms) {
  const auto mesh = unit_interval_mesh(2);
  const auto zero = assemble(mesh, ex("0"), ex("1"));
  expect_matrix(zero.stiffness, {{2, -2, 0}, {-2, 4, -2}, {0, -2, 2}}, 1e-14);
  expect_matrix(zero.weighted_mass[1],
                {{1.0 / 6, 1.0 / 12, 0}, {1.0 / 12, 1.0 / 3, 1.0 / 12}, {0, 1.0 / 12, 1.0 / 6}}, 1e-15);
  expect_matrix(zero.boundary_mass, {{1, 0, 0}, {0, 0, 0}, {0, 0, 1}}, 0.0);
  EXPECT_DOUBLE_EQ(zero.integral_c[0], 0.0);
  EXPECT_NEAR(zero.integral_c[1], 1.0, 1e-15);
  for (std::size_t n : {1u, 7u, 64u}) {
    const auto f = assemble(unit_interval_mesh(n), ex("1"), ex("1"));
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j <= n; ++j)
        EXPECT_EQ(f.boundary_mass.at(i, j), (i == j && (i == 0 || i == n)) ? 1.0 : 0.0);
  }
}

TEST(Assemble, MidpointQuadratureOfCoefficient) {
  // c = x on one element [0,1]: midpoint value 1/2 times the P1 mass matrix
  const auto f = assemble(unit_interval_mesh(1), ex("x"), ex("0"));
  expect_matrix(f.weighted_mass[0], {{1.0 / 6, 1.0 / 12}, {1.0 / 12, 1.0 / 6}}, 1e-15);
}

TEST(Assemble, NegativeCoefficientRejected) {
  try {
    assemble(unit_interval_mesh(8), ex("x - 0.5"), ex("1"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Assemble, StructuralInvariants) {
  for (const auto& mesh : {unit_interval_mesh(1), unit_interval_mesh(33), unit_square_mesh(1), unit_square_mesh(9)}) {
    const auto f = assemble(mesh, ex("1 + x"), ex("exp(x + y)"));
    const Vector ones(mesh->node_count(), 1.0);
    EXPECT_LE(linalg::norm_inf(f.stiffness * ones), 1e-12 * f.stiffness.max_abs());
    for (const auto* K : {&f.stiffness, &f.mass, &f.weighted_mass[0], &f.weighted_mass[1], &f.boundary_mass})
      EXPECT_LE(K->asymmetry(), 1e-14 * K->max_abs());
    EXPECT_NEAR(total(f.mass * ones), mesh->measure(), 1e-12);
    EXPECT_NEAR(total(f.boundary_mass * ones), mesh->boundary_measure(), 1e-12);
    // P1 stiffness on nonobtuse meshes: off-diagonal entries are nonpositive
    const auto& A = f.stiffness;
    for (std::size_t r = 0; r < A.dim(); ++r)
      for (auto k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k)
        if (A.col_indices()[k] != r) {
          EXPECT_LE(A.values()[k], 1e-15);
        }
  }
}

TEST(Assemble, PositiveSemidefinite) {
  const auto mesh = unit_square_mesh(6);
  const auto f = assemble(mesh, ex("x*y"), ex("0"));
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    Vector v(mesh->node_count());
    for (auto& x : v) x = nd(rng);
    EXPECT_GE(f.stiffness.bilinear(v, v), -1e-12);
    EXPECT_GE(f.weighted_mass[0].bilinear(v, v), -1e-14);
    EXPECT_GT(f.mass.bilinear(v, v), 0.0);
  }
}

TEST(Assemble, DeterministicBitwise) {
  const auto mesh = unit_square_mesh(12);
  const auto a = assemble(mesh, ex("1 + sin(x*y)"), ex("2"));
  const auto b = assemble(mesh, ex("1 + sin(x*y)"), ex("2"));
  ASSERT_EQ(a.operators[0].nonzeros(), b.operators[0].nonzeros());
  for (std::size_t k = 0; k < a.operators[0].nonzeros(); ++k)
    EXPECT_EQ(a.operators[0].values()[k], b.operators[0].values()[k]);
}

TEST(Load, Interior) {
  const auto f2 = assemble(unit_interval_mesh(2), ex("1"), ex("1"));
  const auto b = load_interior(f2, ex("1"));
  EXPECT_NEAR(b[0], 0.25, 1e-15);
  EXPECT_NEAR(b[1], 0.5, 1e-15);
  EXPECT_NEAR(b[2], 0.25, 1e-15);
  EXPECT_EQ(linalg::norm_inf(load_interior(f2, ex("0"))), 0.0);

  const auto f256 = assemble(unit_interval_mesh(256), ex("1"), ex("1"));
  EXPECT_NEAR(total(load_interior(f256, ex("x"))), 0.5, 1e-6);
}

TEST(Load, Boundary) {
  const auto f1 = assemble(unit_interval_mesh(5), ex("1"), ex("1"));
  const auto b = load_boundary(f1, ex("1"));
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_EQ(b[j], (j == 0 || j == 5) ? 1.0 : 0.0);
  EXPECT_EQ(linalg::norm_inf(load_boundary(f1, ex("0"))), 0.0);

  const auto f2 = assemble(unit_square_mesh(4), ex("1"), ex("1"));
  EXPECT_NEAR(total(load_boundary(f2, ex("1"))), 4.0, 1e-12);
}

TEST(Load, RefinementOrder) {
  // integral of sin(3x) + x^2 over (0,1)
  const double exact = (1.0 - std::cos(3.0)) / 3.0 + 1.0 / 3.0;
  std::vector<double> err;
  for (std::size_t n : {16u, 32u, 64u}) {
    const auto f = assemble(unit_interval_mesh(n), ex("1"), ex("1"));
    err.push_back(std::abs(total(load_interior(f, ex("sin(3*x) + x^2"))) - exact));
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(EnergyNorm, Examples) {
  const auto mesh = unit_interval_mesh(16);
  const auto f = assemble(mesh, ex("1"), ex("0"));
  EXPECT_EQ(energy_norm(FemFunction::constant(mesh, 0.0), f, 0), 0.0);
  EXPECT_NEAR(energy_norm(FemFunction::constant(mesh, 1.0), f, 0), 1.0, 1e-14);
  EXPECT_NEAR(energy_norm(FemFunction::interpolate(mesh, ex("x")), f, 1), 1.0, 1e-14);
}

TEST(FemFunction, InterpolateAndExtremes) {
  const auto mesh = unit_interval_mesh(4);
  const auto u = FemFunction::interpolate(mesh, ex("lambda*x"), expr::Bindings{}.set(expr::Var::Lambda, 2.0));
  EXPECT_DOUBLE_EQ(u[2], 1.0);
  EXPECT_DOUBLE_EQ(u.max(), 2.0);
  EXPECT_DOUBLE_EQ(u.min(), 0.0);
  EXPECT_DOUBLE_EQ(u.scaled(0.5).max(), 1.0);
  EXPECT_THROW(FemFunction(mesh, Vector(3, 0.0)), Error);
}
