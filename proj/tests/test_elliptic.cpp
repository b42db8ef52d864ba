// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <random>

#include "semilin/elliptic.hpp"
#include "semilin/error.hpp"
#include "support.hpp"

using namespace semilin;
using namespace semilin::elliptic;
using fem::FemFunction;
using semilin::testing::ex;

namespace {

Vector rhs(const fem::AssembledForms& forms, const FemFunction& f, const Vector& g) {
  Vector b = fem::load_interior(forms, f.values());
  linalg::axpy(1.0, fem::load_boundary(forms, g), b);
  return b;
}

double mu_h(std::size_t n) {
  const auto forms = fem::assemble(fem::unit_interval_mesh(n), ex("1"), ex("1"));
  return steklov_first_eigenpair(forms, 0).mu;
}

}  // namespace

TEST(Oracle, SteklovRootAndAuxiliaryClosedForm) {
  const double w = semilin::testing::steklov_omega();
  EXPECT_NEAR(w * std::tanh(w / 2) + w * w, 1.0, 1e-14);
  EXPECT_NEAR(semilin::testing::steklov_mu(), 0.3215, 2e-4);
  EXPECT_NEAR(semilin::testing::steklov_mu(), 0.321352361144190, 1e-13);  // 30-digit reference
  // the closed form written with exponentials, as a cross-check of the oracle
  const double e = std::exp(1.0);
  for (double x : {0.0, 0.3, 0.5, 1.0})
    EXPECT_NEAR(semilin::testing::aux_phi(x), 1.0 + (std::exp(x) + std::exp(1.0 - x)) / (e - 1.0), 1e-14);
  EXPECT_NEAR(semilin::testing::aux_sup(), 1.0 + (1.0 + e) / (e - 1.0), 1e-14);
  EXPECT_NEAR(semilin::testing::aux_min_normalized(),
              (1.0 + 2.0 * std::sqrt(e) / (e - 1.0)) / (1.0 + (1.0 + e) / (e - 1.0)), 1e-14);
}

TEST(SolveRobin, ConstantsAreExact) {
  for (const auto& mesh : {fem::unit_interval_mesh(64), fem::unit_square_mesh(16)}) {
    const auto forms = fem::assemble(mesh, ex("0"), ex("0"));
    const RobinSystem sys(forms, 1.0, 0);
    const auto f = FemFunction::constant(mesh, 1.0);
    const Vector g(mesh->node_count(), 1.0);
    const auto w = solve_robin(sys, f, g);
    for (std::size_t j = 0; j < w.size(); ++j) EXPECT_NEAR(w[j], 1.0, 1e-10);
    Vector r = sys.matrix() * w.values();
    linalg::axpy(-1.0, rhs(forms, f, g), r);
    EXPECT_LE(linalg::norm_inf(r), 1e-10);
  }
}

TEST(SolveRobin, ZeroData) {
  const auto mesh = fem::unit_interval_mesh(32);
  const auto forms = fem::assemble(mesh, ex("1"), ex("1"));
  const auto w = solve_robin(RobinSystem(forms, 0.0, 1), FemFunction::constant(mesh, 0.0), Vector(33, 0.0));
  EXPECT_EQ(linalg::norm_inf(w.values()), 0.0);
}

TEST(SolveRobin, AuxiliaryClosedFormSecondOrder) {
  std::vector<double> err;
  for (std::size_t n : {64u, 128u, 256u}) {
    const auto mesh = fem::unit_interval_mesh(n);
    const auto forms = fem::assemble(mesh, ex("1"), ex("1"));
    const auto w = solve_robin(RobinSystem(forms, 0.0, 0), FemFunction::constant(mesh, 1.0),
                               Vector(mesh->node_count(), 1.0));
    double e = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
      e = std::max(e, std::abs(w[j] - semilin::testing::aux_phi(mesh->nodes()[j][0])));
    err.push_back(e);
  }
  EXPECT_LE(err.back(), 1e-3);
  EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(SolveRobin, SingularWithoutShiftOrCoefficient) {
  const auto forms = fem::assemble(fem::unit_interval_mesh(8), ex("0"), ex("1"));
  try {
    RobinSystem(forms, 0.0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  EXPECT_NO_THROW(RobinSystem(forms, 0.5, 0));
  EXPECT_NO_THROW(RobinSystem(forms, 0.0, 1));
}

TEST(SolveRobin, Linearity) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& mesh : {fem::unit_interval_mesh(50), fem::unit_square_mesh(10)}) {
    const auto forms = fem::assemble(mesh, ex("1 + x"), ex("0"));
    const RobinSystem sys(forms, 0.7, 1);
    const std::size_t n = mesh->node_count();
    Vector f1(n), f2(n), g1(n), g2(n);
    for (std::size_t j = 0; j < n; ++j) {
      f1[j] = u(rng);
      f2[j] = u(rng);
      g1[j] = u(rng);
      g2[j] = u(rng);
    }
    const double a = 1.7, b = -0.6;
    Vector fc(n), gc(n);
    for (std::size_t j = 0; j < n; ++j) {
      fc[j] = a * f1[j] + b * f2[j];
      gc[j] = a * g1[j] + b * g2[j];
    }
    const auto w1 = solve_robin(sys, FemFunction(mesh, f1), g1, 1e-13);
    const auto w2 = solve_robin(sys, FemFunction(mesh, f2), g2, 1e-13);
    const auto wc = solve_robin(sys, FemFunction(mesh, fc), gc, 1e-13);
    double diff = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double lin = a * w1[j] + b * w2[j];
      diff = std::max(diff, std::abs(wc[j] - lin));
      scale = std::max(scale, std::abs(lin));
    }
    EXPECT_LE(diff, 1e-9 * scale);
  }
}

// Nonnegative data gives a nonnegative solution on M-matrix meshes.
TEST(SolveRobin, DiscreteComparison) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& mesh : {fem::unit_interval_mesh(40), fem::unit_square_mesh(12)}) {
    const auto forms = fem::assemble(mesh, ex("x"), ex("1"));
    for (double kappa : {0.0, 1.0}) {
      const RobinSystem sys(forms, kappa, 1);
      for (int trial = 0; trial < 10; ++trial) {
        Vector f(mesh->node_count()), g(mesh->node_count());
        for (auto& v : f) v = u(rng) < 0.3 ? u(rng) : 0.0;  // sparse, nonnegative
        for (auto& v : g) v = u(rng) < 0.3 ? u(rng) : 0.0;
        const auto w = solve_robin(sys, FemFunction(mesh, f), g);
        EXPECT_GE(w.min(), -1e-10 * std::max(1.0, w.max()));
      }
    }
  }
}

TEST(Steklov, IntervalOracle) {
  const double mu_star = semilin::testing::steklov_mu();
  const double w = semilin::testing::steklov_omega();
  for (std::size_t n : {64u, 128u, 256u}) {
    const auto mesh = fem::unit_interval_mesh(n);
    const auto forms = fem::assemble(mesh, ex("1"), ex("1"));
    const auto e = steklov_first_eigenpair(forms, 0);
    EXPECT_LE(std::abs(e.mu - mu_star), 5.0 / static_cast<double>(n * n)) << n;
    EXPECT_DOUBLE_EQ(e.phi.max(), 1.0);
    EXPECT_GE(e.phi.min(), -1e-10);
    double err = 0.0;
    for (std::size_t j = 0; j < e.phi.size(); ++j) {
      const double x = mesh->nodes()[j][0];
      err = std::max(err, std::abs(e.phi[j] - std::cosh(w * (x - 0.5)) / std::cosh(w / 2)));
    }
    EXPECT_LE(err, 1e-3) << n;
  }
}

TEST(Steklov, ConvergenceOrderAndRichardson) {
  const double mu_star = semilin::testing::steklov_mu();
  const double m64 = mu_h(64), m128 = mu_h(128), m256 = mu_h(256);
  EXPECT_GE(std::log2(std::abs(m64 - mu_star) / std::abs(m128 - mu_star)), 1.9);
  EXPECT_GE(std::log2(std::abs(m128 - mu_star) / std::abs(m256 - mu_star)), 1.9);
  EXPECT_LE(std::abs(m128 - m256), 4.0 * std::abs(m256 - mu_star));
}

TEST(Steklov, EigenpairResidual) {
  const auto forms = fem::assemble(fem::unit_square_mesh(12), ex("1 + x*y"), ex("2"));
  for (std::size_t i : {0u, 1u}) {
    const auto e = steklov_first_eigenpair(forms, i);
    const auto B = forms.mass.combine(1.0, forms.boundary_mass, 1.0);
    Vector Kphi = forms.operator_matrix(i) * e.phi.values();
    Vector r = Kphi;
    linalg::axpy(-e.mu, B * e.phi.values(), r);
    EXPECT_LE(linalg::norm2(r), 1e-8 * linalg::norm2(Kphi));
    EXPECT_GT(e.mu, 0.0);
    EXPECT_GE(e.phi.min(), -1e-10);
    EXPECT_EQ(e.equation, i);
  }
}

TEST(Steklov, KernelWithInteriorMassOnly) {
  // (A + M) phi = mu M phi has mu = 1 with constant phi, since A kills constants.
  const auto forms = fem::assemble(fem::unit_interval_mesh(32), ex("1"), ex("1"));
  const auto r = linalg::inverse_power_generalized(forms.operator_matrix(0), forms.mass, 1e-12, 1000);
  ASSERT_TRUE(r.report.converged);
  EXPECT_NEAR(r.eigenvalue, 1.0, 1e-10);
  for (double v : r.eigenvector) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(Steklov, RequiresNonzeroCoefficient) {
  const auto forms = fem::assemble(fem::unit_interval_mesh(16), ex("0"), ex("1"));
  try {
    steklov_first_eigenpair(forms, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Auxiliary, IntervalClosedForm) {
  const auto forms = fem::assemble(fem::unit_interval_mesh(256), ex("1"), ex("4"));
  const auto a = auxiliary_unit_solution(forms, 0);
  EXPECT_NEAR(a.sup_norm, semilin::testing::aux_sup(), 1e-3);
  EXPECT_NEAR(a.normalized.min(), semilin::testing::aux_min_normalized(), 1e-3);
  EXPECT_DOUBLE_EQ(a.normalized.max(), 1.0);
  EXPECT_GT(a.phi.min(), 0.0);

  // c = 4: phi = 1/4 + cosh(2(x - 1/2)) / (2 sinh 1)
  const auto a4 = auxiliary_unit_solution(forms, 1);
  EXPECT_NEAR(a4.sup_norm, 0.25 + std::cosh(1.0) / (2.0 * std::sinh(1.0)), 1e-3);
  EXPECT_LT(a4.sup_norm, a.sup_norm);
}

TEST(Auxiliary, ScaledSystem) {
  // phi* solves (A + Mc) phi* = (M 1 + Mb 1) / ||phi||
  const auto mesh = fem::unit_square_mesh(10);
  const auto forms = fem::assemble(mesh, ex("1 + x"), ex("1"));
  const auto a = auxiliary_unit_solution(forms, 0);
  Vector r = forms.operator_matrix(0) * a.normalized.values();
  const Vector ones(mesh->node_count(), 1.0);
  Vector b = fem::load_interior(forms, ones);
  linalg::axpy(1.0, fem::load_boundary(forms, ones), b);
  linalg::axpy(-1.0 / a.sup_norm, b, r);
  EXPECT_LE(linalg::norm_inf(r), 1e-9);
}
