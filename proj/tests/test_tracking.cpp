#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "softarm/tracking.hpp"
#include "softarm/verify.hpp"

using namespace softarm;
using namespace softarm::tracking;

namespace {

const dynamics::DiscreteModel& model() {
  static const auto m = dynamics::nominal_discrete({}, 0.02);
  return m;
}

Disturbance random_disturbance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Disturbance d;
  for (int i = 0; i < kNumStates; ++i) d(i) = u(rng);
  return d;
}

}  // namespace

TEST(Target, OriginEquilibrium) {
  const auto t = compute_target({}, Disturbance::Zero(), model());
  EXPECT_LT(t.x_bar.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(t.u_bar.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Target, StaticForceBalance) {
  const dynamics::ModelParams p;
  const double r = deg2rad(10.0);
  const auto t = compute_target({r, 0.0}, Disturbance::Zero(), model());
  EXPECT_NEAR(t.x_bar(idx::kAlpha), r, 1e-12);
  EXPECT_NEAR(t.x_bar(idx::kAlphaDot), 0.0, 1e-12);
  // Pressure settles at its set point, and h dp = k alpha.
  EXPECT_NEAR(t.x_bar(idx::kDpAlpha), t.u_bar(0), 1e-12);
  EXPECT_NEAR(p.alpha.h * t.u_bar(0), p.alpha.k * r, 1e-10);
  EXPECT_NEAR(t.u_bar(1), 0.0, 1e-12);
}

TEST(Target, PlugBackResidual) {
  const TargetSolver solver(model());
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> angle(-0.6, 0.6);
  for (int i = 0; i < 100; ++i) {
    const Setpoint r{angle(rng), angle(rng)};
    const auto d = random_disturbance(rng);
    const auto t = solver.solve(r, d);
    EXPECT_LE(verify::target_residual(model(), t, r, d), 1e-8);
    EXPECT_LE(solver.residual(t, r, d), 1e-8);
    // One step under the model returns the target state.
    EXPECT_LE((model().step(t.x_bar, t.u_bar, d) - t.x_bar).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_FALSE(solver.degraded());
  EXPECT_LT(solver.condition_number(), TargetSolver::kConditionLimit);
}

TEST(Target, Linearity) {
  const TargetSolver solver(model());
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> angle(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) {
    const Setpoint r1{angle(rng), angle(rng)}, r2{angle(rng), angle(rng)};
    const auto d1 = random_disturbance(rng), d2 = random_disturbance(rng);
    const auto a = solver.solve(r1, d1), b = solver.solve(r2, d2);
    const auto sum = solver.solve({r1.alpha + r2.alpha, r1.beta + r2.beta}, d1 + d2);
    EXPECT_LE((a.x_bar + b.x_bar - sum.x_bar).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((a.u_bar + b.u_bar - sum.u_bar).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Target, SingularModelFallsBackToMinimumNorm) {
  // Zero stiffness and zero pressure gain on beta make the beta rows singular.
  dynamics::DiscreteModel m = model();
  m.b.col(1).setZero();
  m.a.row(idx::kBetaDot).setZero();
  m.a(idx::kBetaDot, idx::kBetaDot) = 1.0;
  const TargetSolver solver(m);
  EXPECT_TRUE(solver.degraded());
  const auto t = solver.solve({0.1, 0.1}, Disturbance::Zero());
  EXPECT_TRUE(t.x_bar.allFinite());
  EXPECT_TRUE(t.u_bar.allFinite());
}

TEST(TargetTrajectory, ShapeAndConstantRefs) {
  const std::vector<Setpoint> refs(51, Setpoint{0.2, -0.1});
  Disturbance d = Disturbance::Zero();
  d(idx::kAlphaDot) = 3.0;
  const auto out = compute_target_trajectory(refs, d, model());
  ASSERT_EQ(out.size(), refs.size());
  for (const auto& t : out) {
    EXPECT_EQ(t.x_bar, out.front().x_bar);
    EXPECT_EQ(t.u_bar, out.front().u_bar);
  }
}

TEST(TargetTrajectory, RampIsMonotone) {
  std::vector<Setpoint> refs;
  for (int i = 0; i <= 50; ++i) refs.push_back({deg2rad(0.5 * i), 0.0});
  const auto out = compute_target_trajectory(refs, Disturbance::Zero(), model());
  for (std::size_t i = 1; i < out.size(); ++i) {
    EXPECT_GT(out[i].x_bar(idx::kAlpha), out[i - 1].x_bar(idx::kAlpha));
  }
}

TEST(TargetTrajectory, MatchesSingleSolves) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> angle(-0.5, 0.5);
  std::vector<Setpoint> refs;
  for (int i = 0; i < 11; ++i) refs.push_back({angle(rng), angle(rng)});
  const auto d = random_disturbance(rng);
  const auto out = compute_target_trajectory(refs, d, model());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto one = compute_target(refs[i], d, model());
    EXPECT_LE((one.x_bar - out[i].x_bar).cwiseAbs().maxCoeff(), 1e-12);
  }
}
