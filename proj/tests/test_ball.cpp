#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <Eigen/Eigenvalues>

#include "softarm/ball.hpp"
#include "softarm/sphere.hpp"
#include "softarm/verify.hpp"

using namespace softarm;
using namespace softarm::ball;

namespace {

BallVector throw_state(double k_d) {
  BallVector x;
  x << 0.0, -1.9, 0.3, 0.0, 3.5, 4.0, k_d;
  return x;
}

// Integrates to time `t` with steps of `h`.
BallVector integrate(BallVector x, double t, double h) {
  const int n = static_cast<int>(std::lround(t / h));
  for (int i = 0; i < n; ++i) x = rk4_step(x, h);
  return x;
}

}  // namespace

TEST(BallDynamics, GravityAndQuadraticDrag) {
  BallVector x = BallVector::Zero();
  auto dx = ball_dynamics(x);
  EXPECT_EQ(dx.head<3>(), Vector3::Zero());
  EXPECT_DOUBLE_EQ(dx(5), -kGravity);
  EXPECT_EQ(dx(6), 0.0);

  x << 0, 0, 0, 3.0, 0.0, -4.0, 0.1;  // |v| = 5
  dx = ball_dynamics(x);
  EXPECT_DOUBLE_EQ(dx(0), 3.0);
  EXPECT_DOUBLE_EQ(dx(3), -0.1 * 5.0 * 3.0);
  EXPECT_DOUBLE_EQ(dx(4), 0.0);
  EXPECT_DOUBLE_EQ(dx(5), -kGravity + 0.1 * 5.0 * 4.0);

  const Vector3 wind(1.5, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(ball_dynamics(x, wind)(3), dx(3) + 1.5);
}

TEST(BallDynamics, JacobianMatchesFiniteDifference) {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    BallVector x = BallVector::NullaryExpr([&] { return u(rng); });
    x(6) = 0.01 * std::abs(u(rng));
    const auto f = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return ball_dynamics(v);
    };
    const Eigen::MatrixXd fd = verify::central_difference(f, x, 1e-6);
    EXPECT_LE((ball_jacobian(x) - fd).cwiseAbs().maxCoeff(), 1e-6) << trial;

    const auto g = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return rk4_step(v, kDefaultStep);
    };
    const Eigen::MatrixXd fd_rk4 = verify::central_difference(g, x, 1e-6);
    EXPECT_LE((rk4_jacobian(x, kDefaultStep) - fd_rk4).cwiseAbs().maxCoeff(), 1e-6) << trial;
  }
}

TEST(BallDynamics, FreeFallIsExact) {
  BallVector x = BallVector::Zero();
  x(2) = 2.0;
  x(3) = 1.0;
  const auto y = integrate(x, 0.5, 0.01);
  EXPECT_NEAR(y(0), 0.5, 1e-12);
  EXPECT_NEAR(y(2), 2.0 - 0.5 * kGravity * 0.25, 1e-12);
  EXPECT_NEAR(y(5), -kGravity * 0.5, 1e-12);
}

TEST(BallDynamics, Rk4IsFourthOrder) {
  const BallVector x0 = throw_state(0.3);
  const BallVector ref = integrate(x0, 0.8, 1e-4);
  const double e1 = (integrate(x0, 0.8, 0.04) - ref).norm();
  const double e2 = (integrate(x0, 0.8, 0.02) - ref).norm();
  EXPECT_NEAR(e1 / e2, 16.0, 1.5);
}

TEST(BallEkf, TracksExactModelWithoutNoise) {
  BallVector truth = throw_state(0.03);
  BallEkf ekf;
  ekf.initialize(truth.head<3>() + Vector3(0.01, -0.01, 0.0), truth.segment<3>(3) * 0.9);
  for (int i = 0; i < 80; ++i) {
    truth = rk4_step(truth, kDefaultStep);
    ekf.step(truth.head<3>());
  }
  const auto s = ekf.state();
  EXPECT_LE((s.position - truth.head<3>()).norm(), 1e-3);
  EXPECT_LE((s.velocity - truth.segment<3>(3)).norm(), 0.05);
}

TEST(BallEkf, RecoversDragCoefficient) {
  for (double k_true : {0.01, 0.04, 0.08}) {
    BallVector truth = throw_state(k_true);
    EkfConfig cfg;
    cfg.q_position = 1e-8;
    cfg.q_velocity = 1e-8;
    BallEkf ekf(cfg);
    ekf.initialize(truth.head<3>(), truth.segment<3>(3));
    for (int i = 0; i < 60; ++i) {
      truth = rk4_step(truth, kDefaultStep);
      ekf.step(truth.head<3>());
    }
    EXPECT_LE(std::abs(ekf.state().k_d - k_true), 0.05 * k_true) << k_true;
  }
}

TEST(BallEkf, CovarianceStaysSymmetricPsd) {
  std::mt19937_64 rng(82);
  std::normal_distribution<double> noise(0.0, 1e-3);
  BallVector truth = throw_state(0.02);
  BallEkf ekf;
  ekf.initialize(truth.head<3>(), truth.segment<3>(3));
  for (int i = 0; i < 150; ++i) {
    truth = rk4_step(truth, kDefaultStep);
    ekf.step(truth.head<3>() + Vector3(noise(rng), noise(rng), noise(rng)));
    const auto& p = ekf.covariance();
    ASSERT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12) << i;
    const Eigen::SelfAdjointEigenSolver<BallMatrix> es(p);
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-12) << i;
    ASSERT_GE(ekf.state().k_d, 0.0);
  }
}

TEST(BallEkf, ConfigRoundTrip) {
  EkfConfig c;
  c.q_velocity = 2e-3;
  c.drag_prior = 0.05;
  KeyValueConfig kv;
  c.to_config(kv);
  const auto back = EkfConfig::from_config(KeyValueConfig::parse(kv.to_string()));
  EXPECT_EQ(back.q_velocity, c.q_velocity);
  EXPECT_EQ(back.drag_prior, c.drag_prior);
  EXPECT_EQ(back.r_position, c.r_position);
}

TEST(Intercept, FreeFallFromApex) {
  const double radius = 0.4, drop = 0.8;
  BallState s;
  s.position = Vector3(0.0, 0.0, radius + drop);
  const auto p = predict_intercept(s, Vector3::Zero(), radius, 2.0);
  ASSERT_TRUE(p.valid);
  EXPECT_NEAR(p.time_to_intercept, verify::free_fall_time(drop), 1e-4);
  EXPECT_NEAR(p.time_to_intercept, std::sqrt(2.0 * drop / kGravity), 1e-4);
  EXPECT_NEAR(p.alpha, 0.0, 1e-9);
  EXPECT_NEAR(p.beta, 0.0, 1e-9);
  EXPECT_NEAR(p.point.z(), radius, 1e-9);
}

TEST(Intercept, ContactLiesOnTheSphere) {
  const Vector3 center(0.0, 0.0, 0.1);
  const double radius = 0.4;
  // Drag-free ballistic aim at a point on the upper half, 0.5 s away.
  const Vector3 aim = center + radius * sphere::direction(0.3, 0.1);
  BallState s;
  s.position = Vector3(0.0, -2.0, 0.6);
  s.velocity = (aim - s.position) / 0.5 + Vector3(0.0, 0.0, 0.25 * kGravity);
  const auto p = predict_intercept(s, center, radius, 2.0);
  ASSERT_TRUE(p.valid);
  EXPECT_LE((p.point - aim).norm(), 1e-6);
  EXPECT_NEAR(p.time_to_intercept, 0.5, 1e-6);
  EXPECT_NEAR((p.point - center).norm(), radius, 1e-9);
  EXPECT_LE((center + radius * sphere::direction(p.alpha, p.beta) - p.point).norm(), 1e-9);
}

TEST(Intercept, WideThrowIsInvalid) {
  BallState s;
  s.position = Vector3(1.5, -2.0, 0.5);
  s.velocity = Vector3(0.0, 3.0, 3.0);
  EXPECT_FALSE(predict_intercept(s, Vector3::Zero(), 0.4, 2.0).valid);

  BallState inside;
  inside.position = Vector3(0.0, 0.0, 0.1);
  EXPECT_FALSE(predict_intercept(inside, Vector3::Zero(), 0.4, 2.0).valid);
}

TEST(ThrowDetector, FiresAfterConsecutiveFastFrames) {
  ThrowDetector det(0.0, 1.0, 3, 0.01);
  Vector3 z(0.0, -2.0, 0.5);
  for (int i = 0; i < 5; ++i) EXPECT_FALSE(det.update(z));
  int fired_at = -1;
  for (int i = 0; i < 5; ++i) {
    z += Vector3(0.0, 0.03, 0.04);  // 5 m/s
    if (det.update(z) && fired_at < 0) fired_at = i;
  }
  EXPECT_EQ(fired_at, 2);
  EXPECT_NEAR(det.velocity().norm(), 5.0, 1e-9);
  EXPECT_TRUE(det.detected());
}

TEST(ThrowDetector, IgnoresMotionBelowHeight) {
  ThrowDetector det(1.0, 1.0, 2, 0.01);
  Vector3 z(0.0, 0.0, 0.2);
  for (int i = 0; i < 10; ++i) {
    z.y() += 0.05;
    EXPECT_FALSE(det.update(z));
  }
}

TEST(Snapshot, ReadersKeepTheirRecord) {
  Snapshot<InterceptPrediction> snap;
  EXPECT_EQ(snap.latest(), nullptr);
  InterceptPrediction a;
  a.alpha = 0.1;
  snap.publish(a);
  const auto held = snap.latest();
  InterceptPrediction b;
  b.alpha = 0.2;
  snap.publish(b);
  EXPECT_DOUBLE_EQ(held->alpha, 0.1);
  EXPECT_DOUBLE_EQ(snap.latest()->alpha, 0.2);
}
