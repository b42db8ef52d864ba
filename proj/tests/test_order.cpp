// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "semilin/elliptic.hpp"
#include "semilin/error.hpp"
#include "semilin/order.hpp"
#include "support.hpp"

using namespace semilin;
using namespace semilin::order;
using fem::FemFunction;
using semilin::testing::constant_pair;
using semilin::testing::ex;

namespace {

FunctionPair pair_of(const fem::MeshPtr& mesh, const char* e1, const char* e2) {
  return {FemFunction::interpolate(mesh, ex(e1)), FemFunction::interpolate(mesh, ex(e2))};
}

bool bitwise_equal(const FunctionPair& a, const FunctionPair& b) {
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (std::bit_cast<std::uint64_t>(a[i][j]) != std::bit_cast<std::uint64_t>(b[i][j])) return false;
  return true;
}

// Two crossing subsolutions of the saturating example: the eigenfunction
// pair 0.05 phi and the convex pair 0.1 exp(0.8 (x - 1)).
struct CrossingSubs {
  FunctionPair low_eps, tilted;
};
CrossingSubs crossing_subs(const ProblemSpec& spec) {
  const auto phi = elliptic::steklov_first_eigenpair(spec.forms, 0).phi;
  const auto t = FemFunction::interpolate(spec.mesh, ex("0.1*exp(0.8*(x-1))"));
  return {{phi.scaled(0.05), phi.scaled(0.05)}, {t, t}};
}

// Two crossing supersolutions: 10 phi* and 7 + 2.5 cosh(x - 1/2).
struct CrossingSupers {
  FunctionPair scaled_aux, shifted_cosh;
};
CrossingSupers crossing_supers(const ProblemSpec& spec) {
  const auto phistar = elliptic::auxiliary_unit_solution(spec.forms, 0).normalized.scaled(10.0);
  const auto c = FemFunction::interpolate(spec.mesh, ex("7 + 2.5*(exp(x-0.5) + exp(0.5-x))/2"));
  return {{phistar, phistar}, {c, c}};
}

}  // namespace

TEST(ProblemSpec, RejectsForeignVariables) {
  const auto mesh = fem::unit_interval_mesh(4);
  try {
    make_problem(mesh, ex("1"), ex("1"), ex("s"), ex("0"), ex("0"), ex("0"), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Verify, UnitLoadConstants) {
  const auto mesh = fem::unit_interval_mesh(32);
  const auto spec = semilin::testing::unit_load_spec(mesh);
  const auto zero = constant_pair(mesh, 0, 0), two = constant_pair(mesh, 2, 2);

  const auto s0 = verify_sub(spec, zero, 1e-10);
  EXPECT_TRUE(s0.pass);
  // r_i = -M 1
  const auto M1 = fem::load_interior(spec.forms, ex("1"));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < M1.size(); ++j) EXPECT_NEAR(s0.residuals[i][j], -M1[j], 1e-15);

  const auto s2 = verify_sub(spec, two, 1e-10);
  EXPECT_FALSE(s2.pass);
  EXPECT_GT(s2.worst_violation, 0.0);

  EXPECT_TRUE(verify_super(spec, two, 1e-10).pass);
  const auto p0 = verify_super(spec, zero, 1e-10);
  EXPECT_FALSE(p0.pass);
  EXPECT_EQ(p0.direction, Direction::Super);
}

TEST(Verify, ConstructionPairs) {
  const auto spec = semilin::testing::saturating_spec(128);
  const auto phi = elliptic::steklov_first_eigenpair(spec.forms, 0).phi;
  const FunctionPair sub{phi.scaled(0.1), phi.scaled(0.1)};
  EXPECT_TRUE(verify_sub(spec, sub, h_scaled_tolerance(spec, sub)).pass);
  const auto phistar = elliptic::auxiliary_unit_solution(spec.forms, 0).normalized;
  const FunctionPair sup{phistar.scaled(10.0), phistar.scaled(10.0)};
  EXPECT_TRUE(verify_super(spec, sup, h_scaled_tolerance(spec, sup)).pass);
  EXPECT_NO_THROW(make_interval(spec, sub, sup));
}

TEST(Verify, BothDirectionsMeansApproximateSolution) {
  const auto mesh = fem::unit_interval_mesh(16);
  const auto spec = semilin::testing::unit_load_spec(mesh);
  const auto one = constant_pair(mesh, 1, 1);
  const double tau = 1e-12;
  const auto a = verify_sub(spec, one, tau), b = verify_super(spec, one, tau);
  ASSERT_TRUE(a.pass && b.pass);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LE(linalg::norm_inf(a.residuals[i]), tau);
}

TEST(Interval, RejectsUnorderedOrFailingPairs) {
  const auto mesh = fem::unit_interval_mesh(64);
  const auto spec = semilin::testing::unit_load_spec(mesh);
  for (auto [lo, hi] : {std::pair{2.0, 0.0}, std::pair{1.5, 2.0}, std::pair{0.0, 0.5}}) {
    try {
      make_interval(spec, constant_pair(mesh, lo, lo), constant_pair(mesh, hi, hi));
      FAIL() << lo << " " << hi;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Construction);
    }
  }
  const auto J = make_interval(spec, constant_pair(mesh, 0, 0), constant_pair(mesh, 2, 2));
  EXPECT_GT(J.sub_tolerance, 0.0);
}

TEST(Lattice, Examples) {
  const auto mesh = fem::unit_interval_mesh(10);
  const auto u = pair_of(mesh, "sin(3*x)", "x^2");
  EXPECT_TRUE(bitwise_equal(lattice_max(u, u), u));
  EXPECT_TRUE(bitwise_equal(lattice_min(u, u), u));
  EXPECT_TRUE(bitwise_equal(lattice_max(constant_pair(mesh, 0, 0), constant_pair(mesh, 1, 1)), constant_pair(mesh, 1, 1)));

  const auto a = pair_of(mesh, "x", "x"), b = pair_of(mesh, "1-x", "1-x");
  const auto hi = lattice_max(a, b), lo = lattice_min(a, b);
  for (std::size_t j = 0; j < mesh->node_count(); ++j) {
    const double x = mesh->nodes()[j][0];
    EXPECT_DOUBLE_EQ(hi.first[j], std::max(x, 1 - x));
    EXPECT_DOUBLE_EQ(lo.second[j], std::min(x, 1 - x));
  }
  EXPECT_THROW(lattice_max(a, constant_pair(fem::unit_interval_mesh(3), 0, 0)), Error);
}

TEST(Lattice, OrderAxioms) {
  const auto mesh = fem::unit_square_mesh(8);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  auto random_pair = [&] {
    Vector v1(mesh->node_count()), v2(mesh->node_count());
    for (auto& v : v1) v = u(rng);
    for (auto& v : v2) v = u(rng);
    return FunctionPair{FemFunction(mesh, v1), FemFunction(mesh, v2)};
  };
  for (int k = 0; k < 20; ++k) {
    const auto a = random_pair(), b = random_pair();
    const auto hi = lattice_max(a, b), lo = lattice_min(a, b);
    EXPECT_TRUE(ordered(a, hi) && ordered(b, hi));
    EXPECT_TRUE(ordered(lo, a) && ordered(lo, b));
    EXPECT_TRUE(bitwise_equal(hi, lattice_max(b, a)));
    EXPECT_TRUE(bitwise_equal(lo, lattice_min(b, a)));
    EXPECT_TRUE(bitwise_equal(lattice_max(hi, hi), hi));
    EXPECT_LE(order_violation(lo, hi), 0.0);
  }
}

TEST(Composite, EqualPairsGivePlainLoad) {
  const auto spec = semilin::testing::saturating_spec(20);
  const auto a = pair_of(spec.mesh, "0.2 + x", "0.3*x");
  const auto c = composite_load(spec, a, a, LatticeMode::Max);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto f = interior_values(spec, i, a), g = boundary_values(spec, i, a);
    for (std::size_t j = 0; j < f.size(); ++j) {
      EXPECT_EQ(c.interior_nodal[i][j], f[j]);
      EXPECT_EQ(c.boundary_nodal[i][j], g[j]);
    }
  }
}

TEST(Composite, ComparablePairsSelectTheLarger) {
  const auto spec = semilin::testing::saturating_spec(20);
  const auto a = pair_of(spec.mesh, "x", "x"), b = pair_of(spec.mesh, "1 + x", "2");
  const auto c = composite_load(spec, a, b, LatticeMode::Max);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto f = interior_values(spec, i, b);
    for (std::size_t j = 0; j < f.size(); ++j) {
      EXPECT_EQ(c.interior_nodal[i][j], f[j]);
      EXPECT_FALSE(c.from_a[i][j]);
    }
  }
  const auto m = composite_load(spec, a, b, LatticeMode::Min);
  for (std::size_t j = 0; j < spec.mesh->node_count(); ++j) EXPECT_TRUE(m.from_a[0][j]);
}

// Independent per-node evaluation of the composite selection.
TEST(Composite, CrossingPairMatchesBruteForce) {
  const auto spec = order::make_problem(fem::unit_interval_mesh(21), ex("1"), ex("1"), ex("u2/(1+u2) + x*u1"),
                                        ex("u1^2 + u2"), ex("2*u2 - u1"), ex("u1 + 0.5*u2"), 1.0);
  const auto a = pair_of(spec.mesh, "x", "0.3 + x^2"), b = pair_of(spec.mesh, "1-x", "0.6 - 0.2*x");
  const auto& mesh = *spec.mesh;
  for (auto mode : {LatticeMode::Max, LatticeMode::Min}) {
    const auto c = composite_load(spec, a, b, mode);
    bool switched = false;
    for (std::size_t j = 0; j < mesh.node_count(); ++j) {
      const double x = mesh.nodes()[j][0];
      auto pick = [&](double p, double q) { return mode == LatticeMode::Max ? (p > q) : (p < q); };
      const double g1 = mode == LatticeMode::Max ? std::max(a.first[j], b.first[j]) : std::min(a.first[j], b.first[j]);
      const double g2 =
          mode == LatticeMode::Max ? std::max(a.second[j], b.second[j]) : std::min(a.second[j], b.second[j]);
      const bool a1 = pick(a.first[j], b.first[j]), a2 = pick(a.second[j], b.second[j]);
      const double w1 = a1 ? a.first[j] : b.first[j];
      const double w2 = a2 ? a.second[j] : b.second[j];
      auto at = [&](const expr::Expr& e, double u1, double u2) {
        return e.eval(expr::Bindings{}.set("x", x).set("y", 0.0).set("u1", u1).set("u2", u2).set("lambda", 1.0));
      };
      EXPECT_DOUBLE_EQ(c.interior_nodal[0][j], at(spec.f[0], w1, g2));
      EXPECT_DOUBLE_EQ(c.interior_nodal[1][j], at(spec.f[1], g1, w2));
      const bool bdry = mesh.boundary_node_mask()[j];
      EXPECT_DOUBLE_EQ(c.boundary_nodal[0][j], bdry ? at(spec.g[0], w1, g2) : 0.0);
      EXPECT_DOUBLE_EQ(c.boundary_nodal[1][j], bdry ? at(spec.g[1], g1, w2) : 0.0);
      EXPECT_EQ(c.from_a[0][j], a1);
      EXPECT_EQ(c.gamma.first[j], g1);
      if (j > 0 && c.from_a[0][j] != c.from_a[0][j - 1]) {
        switched = true;
        const double xm = mesh.nodes()[j - 1][0];
        EXPECT_LE(xm, 0.5);
        EXPECT_GE(x, 0.5);
      }
    }
    EXPECT_TRUE(switched);
  }
}

TEST(Composite, QuasimonotoneDomination) {
  const auto spec = semilin::testing::saturating_spec(64);
  const auto [p, q] = crossing_subs(spec);
  const auto c = composite_load(spec, p, q, LatticeMode::Max);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto f = interior_values(spec, i, c.gamma);
    for (std::size_t j = 0; j < f.size(); ++j) EXPECT_LE(c.interior_nodal[i][j], f[j] + 1e-10);
  }
}

TEST(Kato, ComparableSubsolutions) {
  const auto spec = semilin::testing::saturating_spec(64);
  const auto phi = elliptic::steklov_first_eigenpair(spec.forms, 0).phi;
  const FunctionPair a{phi.scaled(0.05), phi.scaled(0.05)}, b{phi.scaled(0.1), phi.scaled(0.1)};
  const auto r = kato_check(spec, a, b, h_scaled_tolerance(spec, b));
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Kato, CrossingSubsolutionsAndSupersolutions) {
  for (std::size_t n : {64u, 256u}) {
    const auto spec = semilin::testing::saturating_spec(n);
    const auto [p, q] = crossing_subs(spec);
    ASSERT_GT(order_violation(p, q), 0.0);
    ASSERT_GT(order_violation(q, p), 0.0);
    const double tau = h_scaled_tolerance(spec, lattice_max(p, q));
    ASSERT_TRUE(verify_sub(spec, p, tau).pass);
    ASSERT_TRUE(verify_sub(spec, q, tau).pass);
    EXPECT_TRUE(kato_check(spec, p, q, tau, LatticeMode::Max).pass) << n;

    const auto [s, t] = crossing_supers(spec);
    ASSERT_GT(order_violation(s, t), 0.0);
    ASSERT_GT(order_violation(t, s), 0.0);
    const double tau2 = h_scaled_tolerance(spec, lattice_min(s, t));
    EXPECT_TRUE(kato_check(spec, s, t, tau2, LatticeMode::Min).pass) << n;
  }
}

TEST(Kato, InputsMustQualify) {
  const auto mesh = fem::unit_interval_mesh(16);
  const auto spec = semilin::testing::unit_load_spec(mesh);
  EXPECT_THROW(kato_check(spec, constant_pair(mesh, 0, 0), constant_pair(mesh, 2, 2), 1e-10), Error);
}

TEST(Kato, WarnsOnObtuseMesh) {
  // a sheared triangle pair: the angle at node 1 is obtuse
  auto mesh = std::make_shared<const fem::Mesh>(2, std::vector<fem::Point>{{0, 0}, {1, 0}, {2, 1}, {0, 1}},
                                                std::vector<std::size_t>{0, 1, 2, 0, 2, 3},
                                                std::vector<std::size_t>{0, 1, 1, 2, 2, 3, 3, 0});
  ASSERT_FALSE(mesh->is_nonobtuse());
  const auto spec = semilin::testing::unit_load_spec(mesh);
  const auto z = constant_pair(mesh, 0, 0);
  const auto r = kato_check(spec, z, z, 1e-10);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Quasimonotone, SampledWarnings) {
  const auto mesh = fem::unit_interval_mesh(8);
  const std::array<std::pair<double, double>, 2> box{std::pair{0.0, 1.0}, std::pair{0.0, 1.0}};
  EXPECT_TRUE(check_quasimonotone(semilin::testing::saturating_spec(8), box).empty());
  const auto bad = make_problem(mesh, ex("1"), ex("1"), ex("-u2"), ex("u1"), ex("0"), ex("-u1^2"), 1.0);
  EXPECT_EQ(check_quasimonotone(bad, box).size(), 2u);
}
