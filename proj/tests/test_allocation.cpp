#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "softarm/allocation.hpp"
#include "softarm/verify.hpp"

using namespace softarm;
using namespace softarm::allocation;

TEST(Allocation, EqualPressuresGiveZeroDifferences) {
  const auto v = xi({1.2, 1.2, 1.2});
  EXPECT_DOUBLE_EQ(v.dp_alpha, 0.0);
  EXPECT_DOUBLE_EQ(v.dp_beta, 0.0);
  EXPECT_DOUBLE_EQ(v.p_bar, 1.2);
}

TEST(Allocation, HandEvaluatedExample) {
  // dp_ab = 0.2, dp_bc = 0.1 -> (sqrt(3)/2 * 0.1, -0.2 - 0.05)
  const auto v = xi({1.3, 1.1, 1.0});
  EXPECT_NEAR(v.dp_alpha, 0.1 * std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_NEAR(v.dp_beta, -0.25, 1e-15);
  EXPECT_DOUBLE_EQ(v.p_bar, 1.0);
}

TEST(Allocation, TransformIsInvertible) {
  EXPECT_NEAR(transform().determinant(), std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_TRUE((transform() * transform_inverse()).isIdentity(1e-15));
}

TEST(Allocation, ZeroDifferencesGiveUniformPressure) {
  const auto p = xi_inv({0.0, 0.0, 1.05});
  EXPECT_DOUBLE_EQ(p.p_a, 1.05);
  EXPECT_DOUBLE_EQ(p.p_b, 1.05);
  EXPECT_DOUBLE_EQ(p.p_c, 1.05);
}

TEST(Allocation, RoundTripsAndMinimumPressure) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pressure(0.5, 3.0), diff(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const AllocatedInput v{diff(rng), diff(rng), pressure(rng)};
    const auto p = xi_inv(v);
    EXPECT_NEAR(std::min({p.p_a, p.p_b, p.p_c}), v.p_bar, 1e-12);
    const auto back = xi(p);
    EXPECT_NEAR(back.dp_alpha, v.dp_alpha, 1e-12);
    EXPECT_NEAR(back.dp_beta, v.dp_beta, 1e-12);
    EXPECT_NEAR(back.p_bar, v.p_bar, 1e-12);

    const ActuatorPressures q{pressure(rng), pressure(rng), pressure(rng)};
    const auto again = xi_inv(xi(q));
    EXPECT_NEAR(again.p_a, q.p_a, 1e-12);
    EXPECT_NEAR(again.p_b, q.p_b, 1e-12);
    EXPECT_NEAR(again.p_c, q.p_c, 1e-12);
  }
}

TEST(InputPolytope, MatchesPressureBoxOnGrid) {
  for (double p_bar : {1.0, 1.05, 1.3}) {
    const auto poly = build_input_polytope(1.0, 1.9, p_bar);
    int mismatches = 0;
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 200; ++j) {
        const Vector2 u(-1.2 + 2.4 * i / 199.0, -1.2 + 2.4 * j / 199.0);
        if (poly.contains(u) != verify::pressure_box_contains(u, 1.0, 1.9, p_bar)) ++mismatches;
      }
    }
    EXPECT_EQ(mismatches, 0) << "p_bar " << p_bar;
  }
}

TEST(InputPolytope, OriginFeasibleAndBoundaryProbe) {
  const auto poly = build_input_polytope(1.0, 1.9, 1.05);
  EXPECT_TRUE(poly.contains(Vector2::Zero()));
  EXPECT_LT(poly.max_violation(Vector2::Zero()), 0.0);

  const double span = 1.9 - 1.05;
  // dp_ab on the limit with dp_bc = 0 is feasible; just past it is not.
  const Vector2 edge = transform() * Vector2(span, 0.0);
  const Vector2 past = transform() * Vector2(span + 1e-6, 0.0);
  EXPECT_TRUE(poly.contains(edge));
  EXPECT_TRUE(verify::pressure_box_contains(edge, 1.0, 1.9, 1.05));
  EXPECT_FALSE(poly.contains(past));
  EXPECT_FALSE(verify::pressure_box_contains(past, 1.0, 1.9, 1.05));
}

TEST(InputPolytope, BoundedHexagon) {
  const auto poly = build_input_polytope(1.0, 1.9, 1.05);
  EXPECT_EQ(poly.faces.size(), 6u);
  for (double a = 0.0; a < 6.3; a += 0.1) {
    EXPECT_FALSE(poly.contains(Vector2(5.0 * std::cos(a), 5.0 * std::sin(a))));
  }
}

TEST(InputPolytope, RejectsEmptyInterior) {
  EXPECT_THROW(build_input_polytope(1.0, 1.9, 1.9), std::invalid_argument);
  EXPECT_THROW(build_input_polytope(1.0, 1.9, 2.5), std::invalid_argument);
  EXPECT_THROW(build_input_polytope(1.2, 1.9, 1.1), std::invalid_argument);
}
