#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>
#include <Eigen/Eigenvalues>

#include "softarm/estimation.hpp"
#include "softarm/verify.hpp"

using namespace softarm;
using namespace softarm::estimation;

namespace {

dynamics::DiscreteModel nominal() { return dynamics::nominal_discrete({}, 0.02); }

Input excitation(int k) { return {0.2 * std::sin(0.07 * k), 0.15 * std::cos(0.05 * k)}; }

}  // namespace

TEST(Dare, ScalarMatchesBisection) {
  Eigen::MatrixXd a(1, 1), c(1, 1), q(1, 1), r(1, 1);
  a << 0.9;
  c << 1.0;
  q << 1.0;
  r << 1.0;
  const auto sol = solve_dare(a, c, q, r);
  EXPECT_NEAR(sol.p(0, 0), verify::scalar_dare_bisection(0.9, 1.0, 1.0, 1.0), 1e-10);
  EXPECT_NEAR(sol.k(0, 0), sol.p(0, 0) / (sol.p(0, 0) + 1.0), 1e-12);
}

TEST(Dare, UnstableScalarStillConverges) {
  Eigen::MatrixXd a(1, 1), c(1, 1), q(1, 1), r(1, 1);
  a << 1.5;
  c << 2.0;
  q << 0.3;
  r << 0.7;
  const auto sol = solve_dare(a, c, q, r);
  EXPECT_NEAR(sol.p(0, 0), verify::scalar_dare_bisection(1.5, 2.0, 0.3, 0.7), 1e-10);
}

TEST(Dare, DistrustedMeasurementsGiveZeroGain) {
  // Stable arm model with every state measured; the integrating disturbance
  // states are left out because their gain only decays like sqrt(q / r).
  const auto model = nominal();
  const Eigen::MatrixXd a = model.a;
  const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(6, 6);
  const auto sol = solve_dare(a, c, 1e-6 * Eigen::MatrixXd::Identity(6, 6),
                              1e9 * Eigen::MatrixXd::Identity(6, 6));
  EXPECT_LT(sol.k.norm(), 1e-6);

  Eigen::MatrixXd sa(1, 1), sc(1, 1), sq(1, 1), sr(1, 1);
  sa << 0.9;
  sc << 1.0;
  sq << 1.0;
  sr << 1e9;
  EXPECT_LT(solve_dare(sa, sc, sq, sr).k.norm(), 1e-6);
}

TEST(Dare, RejectsUndetectablePair) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2) * 1.2;
  Eigen::MatrixXd c(1, 2);
  c << 1.0, 0.0;
  EXPECT_FALSE(is_detectable(a, c));
  EXPECT_THROW(solve_dare(a, c, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1)),
               EstimationError);
}

TEST(AugmentedModel, StructureAndStability) {
  const auto model = nominal();
  const auto aug = build_augmented(model, NoiseConfig::defaults());
  EXPECT_TRUE((aug.a_aug.topLeftCorner<6, 6>().isApprox(model.a)));
  EXPECT_TRUE((aug.a_aug.topRightCorner<6, 6>().isApprox(model.e)));
  EXPECT_TRUE((aug.a_aug.bottomLeftCorner<6, 6>().isZero(0.0)));
  EXPECT_TRUE((aug.a_aug.bottomRightCorner<6, 6>().isIdentity(0.0)));
  EXPECT_TRUE((aug.b_aug.bottomRows<6>().isZero(0.0)));
  EXPECT_TRUE(is_detectable(aug.a_aug, aug.c_aug));

  const Matrix12 closed =
      (Matrix12::Identity() - aug.k_inf * aug.c_aug) * aug.a_aug;
  EXPECT_LT(spectral_radius(closed), 1.0);
  EXPECT_TRUE(aug.a_hat.isApprox(closed, 1e-12));

  EXPECT_LE((aug.p_inf - aug.p_inf.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::SelfAdjointEigenSolver<Matrix12> es(aug.p_inf);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(KfUpdate, AppliesTheRecursionExactly) {
  const auto aug = build_augmented(nominal(), NoiseConfig::defaults());
  DisturbanceEstimate est;
  est.x_hat = ArmState::Random();
  est.d_hat = Disturbance::Random();
  const Input u(0.1, -0.2);
  const ArmState z = ArmState::Random();
  const auto next = kf_update(est, u, z, aug);
  Vector12 prev;
  prev << est.x_hat, est.d_hat;
  const Vector12 expected = aug.a_hat * prev + aug.b_hat * u + aug.k_inf * z;
  EXPECT_LT((next.x_hat - expected.head<6>()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((next.d_hat - expected.tail<6>()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KfUpdate, NoDisturbanceToFind) {
  const auto model = nominal();
  const auto aug = build_augmented(model, NoiseConfig::defaults());
  ArmState x = ArmState::Zero();
  DisturbanceEstimate est;
  Input u_prev = Input::Zero();
  for (int k = 0; k < 500; ++k) {
    est = kf_update(est, u_prev, x, aug);
    u_prev = excitation(k);
    x = model.step(x, u_prev, Disturbance::Zero());
  }
  EXPECT_LT(est.d_hat.norm(), 1e-6);
}

TEST(KfUpdate, ConvergesToConstantDisturbance) {
  const auto model = nominal();
  const auto aug = build_augmented(model, NoiseConfig::defaults());
  for (double d_star : {5.0, -20.0, 60.0}) {
    Disturbance d = Disturbance::Zero();
    d(idx::kAlphaDot) = d_star;
    ArmState x = ArmState::Zero();
    DisturbanceEstimate est;
    Input u_prev = Input::Zero();
    for (int k = 0; k < 1000; ++k) {
      est = kf_update(est, u_prev, x, aug);
      u_prev = excitation(k);
      x = model.step(x, u_prev, d);
    }
    EXPECT_LE((est.d_hat - d).cwiseAbs().maxCoeff(), 1e-3) << d_star;
  }
}

TEST(KfUpdate, ErrorContractsInLyapunovNorm) {
  const auto model = nominal();
  const auto aug = build_augmented(model, NoiseConfig::defaults());
  // X solves A_hat' X A_hat - X = -I, so e' X e falls at every noiseless step.
  const int n = kNumAugmented;
  const Eigen::MatrixXd at = aug.a_hat.transpose();
  Eigen::MatrixXd kron(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = at(i, j) * at;
  }
  const Matrix12 eye = Matrix12::Identity();
  const Eigen::VectorXd vec_x =
      (Eigen::MatrixXd::Identity(n * n, n * n) - kron)
          .partialPivLu()
          .solve(Eigen::Map<const Eigen::VectorXd>(eye.data(), n * n));
  Matrix12 x_lyap = Eigen::Map<const Matrix12>(vec_x.data());
  x_lyap = 0.5 * (x_lyap + x_lyap.transpose()).eval();

  Disturbance d = Disturbance::Zero();
  d(idx::kBetaDot) = 10.0;
  ArmState x = ArmState::Zero();
  DisturbanceEstimate est;
  Input u_prev = Input::Zero();
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 600; ++k) {
    est = kf_update(est, u_prev, x, aug);
    Vector12 err;
    err << est.x_hat - x, est.d_hat - d;
    const double v = err.dot(x_lyap * err);
    if (v > 1e-20) {
      EXPECT_LT(v, last) << k;
    }
    last = v;
    u_prev = excitation(k);
    x = model.step(x, u_prev, d);
  }
}

TEST(KfUpdate, UnbiasedUnderMeasurementNoise) {
  const auto model = nominal();
  const auto noise = NoiseConfig::defaults();
  const auto aug = build_augmented(model, noise);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ArmState x = ArmState::Zero();
  DisturbanceEstimate est;
  Input u_prev = Input::Zero();
  const int steps = 10000, batches = 20, per_batch = steps / batches;
  Eigen::Matrix<double, 6, batches> batch_means = Eigen::Matrix<double, 6, batches>::Zero();
  for (int k = 0; k < steps; ++k) {
    ArmState z = x;
    for (int i = 0; i < kNumStates; ++i) z(i) += std::sqrt(noise.r_meas(i, i)) * gauss(rng);
    est = kf_update(est, u_prev, z, aug);
    batch_means.col(k / per_batch) += est.d_hat / per_batch;
    u_prev = excitation(k);
    x = model.step(x, u_prev, Disturbance::Zero());
  }
  // Batch means absorb the serial correlation of the estimate.
  for (int i = 0; i < kNumStates; ++i) {
    const double mean = batch_means.row(i).mean();
    const double var =
        (batch_means.row(i).array() - mean).square().sum() / (batches - 1);
    const double se = std::sqrt(var / batches);
    EXPECT_LE(std::abs(mean), 3.0 * se) << "channel " << i;
  }
}

TEST(DisturbanceObserver, ClampsAndResets) {
  const auto aug = build_augmented(nominal(), NoiseConfig::defaults());
  DisturbanceObserver obs(aug, 0.5);
  ArmState z = ArmState::Zero();
  z(idx::kAlphaDot) = 100.0;
  for (int k = 0; k < 50; ++k) obs.update(Input::Zero(), z);
  EXPECT_LE(obs.estimate().d_hat.cwiseAbs().maxCoeff(), 0.5);
  obs.reset(ArmState::Ones());
  EXPECT_TRUE(obs.estimate().d_hat.isZero(0.0));
  EXPECT_TRUE(obs.estimate().x_hat.isOnes(0.0));
}

TEST(NoiseConfig, ValidationAndConfigRoundTrip) {
  auto n = NoiseConfig::defaults();
  EXPECT_NO_THROW(n.validate());
  KeyValueConfig cfg;
  n.to_config(cfg);
  const auto back = NoiseConfig::from_config(KeyValueConfig::parse(cfg.to_string()));
  EXPECT_TRUE(back.q_proc.isApprox(n.q_proc));
  EXPECT_TRUE(back.r_meas.isApprox(n.r_meas));

  auto bad = n;
  bad.q_proc(0, 1) = 1e-3;
  EXPECT_THROW(bad.validate(), EstimationError);
  bad = n;
  bad.r_meas(2, 2) = -1.0;
  EXPECT_THROW(bad.validate(), EstimationError);
}
