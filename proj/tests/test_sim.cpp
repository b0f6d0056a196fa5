#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "softarm/sim.hpp"
#include "softarm/sphere.hpp"

using namespace softarm;
using namespace softarm::sim;

namespace {

Scenario linear_scenario() {
  return Scenario::load(std::filesystem::path(SOFTARM_SCENARIO_DIR) / "linear.cfg");
}

// Drag-free throw from the default release point that reaches `aim` on the
// sphere after `flight` seconds.
Throw aimed_throw(const ThrowConfig& cfg, const Setpoint& aim, double flight) {
  const Vector3 target = cfg.sphere_center + cfg.sphere_radius * sphere::direction(aim);
  Throw t;
  t.aim = aim;
  t.launch.position =
      cfg.sphere_center + Vector3(0.0, -cfg.thrower_distance, cfg.release_height);
  t.launch.velocity = (target - t.launch.position) / flight +
                      Vector3(0.0, 0.0, 0.5 * ball::kGravity * flight);
  t.launch.k_d = 0.0;
  return t;
}

int csv_lines(const std::string& s) {
  std::istringstream in(s);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST(Scenario, ShippedLinearPlantHasNoMismatch) {
  const auto s = linear_scenario();
  EXPECT_EQ(s.plant.coupling_gain, 0.0);
  EXPECT_EQ(s.plant.relaxation_amplitude, 0.0);
  EXPECT_EQ(s.plant.noise_std_angle, 0.0);
}

TEST(Tracking, DeterministicForAFixedSeed) {
  auto s = Scenario::defaults();
  s.reference.kind = ReferenceKind::kRamp;
  s.duration = 3.0;
  const auto a = run_tracking(s);
  const auto b = run_tracking(s);
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  EXPECT_EQ(metrics_csv({a.metrics}), metrics_csv({b.metrics}));
  s.seed = 2;
  EXPECT_NE(run_tracking(s).log.to_csv(), a.log.to_csv());
}

TEST(Tracking, PerfectModelTracksAConstantReference) {
  auto s = linear_scenario();
  s.rmse_start = 3.0;
  const auto run = run_tracking(s).metrics;
  EXPECT_LT(run.rmse_alpha, 1e-3);
  EXPECT_LT(run.rmse_beta, 1e-3);
  EXPECT_EQ(run.solver.failures, 0);
}

TEST(Tracking, StandardOffsetFollowsTheRelaxationSign) {
  for (double amp : {30.0, -30.0}) {
    auto s = Scenario::defaults();
    s.reference.kind = ReferenceKind::kStep;
    s.plant.relaxation_amplitude = amp;
    s.mpc.mode = mpc::Mode::kStandard;
    const auto standard = run_tracking(s).metrics;
    EXPECT_GT(standard.signed_offset_alpha * amp, 0.0) << amp;
    s.mpc.mode = mpc::Mode::kOffsetFree;
    const auto free = run_tracking(s).metrics;
    EXPECT_LT(free.offset_alpha, 0.1 * standard.offset_alpha) << amp;
  }
}

TEST(Tracking, LogLayout) {
  auto s = linear_scenario();
  s.duration = 1.0;
  const auto run = run_tracking(s);
  ASSERT_FALSE(run.log.columns.empty());
  EXPECT_EQ(run.log.columns.front(), "t");
  EXPECT_EQ(run.log.rows.size(), 50u);
  for (const auto& row : run.log.rows) ASSERT_EQ(row.size(), run.log.columns.size());
  EXPECT_EQ(csv_lines(run.log.to_csv()), 51);
}

TEST(Catch, RestingArmCatchesABallAimedAtTheTip) {
  auto s = linear_scenario();
  s.reference.kind = ReferenceKind::kBallCatch;
  s.ball.measurement_noise = 0.0;
  const auto thrown = aimed_throw(s.ball, {0.0, 0.0}, 0.65);
  const auto run = run_catch(s, thrown, 7);
  EXPECT_TRUE(run.metrics.intercepting);
  EXPECT_TRUE(run.metrics.caught);
  EXPECT_LT(run.metrics.miss_distance, 2e-3);
  EXPECT_NEAR(run.true_intercept_angles.alpha, 0.0, 1e-6);
  EXPECT_NEAR(run.true_intercept_angles.beta, 0.0, 1e-6);
}

TEST(Catch, DeterministicForAFixedSeed) {
  const auto s = Scenario::defaults();
  const auto a = run_catch(s, 3);
  const auto b = run_catch(s, 3);
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  EXPECT_EQ(metrics_csv({a.metrics}), metrics_csv({b.metrics}));
}

TEST(Catch, ZeroWindMatchesNoWind) {
  auto s = Scenario::defaults();
  s.ball.wind = WindGust{0.0, 0.1, 0.3};
  const auto gusted = run_catch(s, 1);
  s.ball.wind = WindGust{};
  const auto still = run_catch(s, 1);
  EXPECT_EQ(gusted.log.to_csv(), still.log.to_csv());
}

TEST(Catch, WindProfileWindow) {
  const WindGust g{2.0, 0.1, 0.2};
  EXPECT_EQ(wind_gust_profile(g, 0.05), Vector3::Zero());
  EXPECT_EQ(wind_gust_profile(g, 0.1), Vector3(2.0, 0.0, 0.0));
  EXPECT_EQ(wind_gust_profile(g, 0.29), Vector3(2.0, 0.0, 0.0));
  EXPECT_EQ(wind_gust_profile(g, 0.31), Vector3::Zero());
}

TEST(Catch, TrueInterceptRejectsThrowsThatMissTheSphere) {
  ThrowConfig cfg;
  auto t = aimed_throw(cfg, {0.2, 0.1}, 0.6);
  EXPECT_TRUE(true_intercept(cfg, t.launch).valid);
  t.launch.velocity.x() += 3.0;
  EXPECT_FALSE(true_intercept(cfg, t.launch).valid);
}

TEST(Catch, BatchSkipsExcludedThrows) {
  auto s = Scenario::defaults();
  s.ball.velocity_noise = 0.4;
  const auto batch = run_catch_batch(s, 4);
  EXPECT_EQ(batch.intercepting, 4);
  EXPECT_GT(batch.attempted, batch.intercepting);
  EXPECT_EQ(static_cast<int>(batch.runs.size()), batch.intercepting);
  for (const auto& r : batch.runs) EXPECT_TRUE(r.intercepting);
  EXPECT_LE(batch.caught, batch.intercepting);
}

TEST(Metrics, CsvTimingIsOptIn) {
  RunMetrics m;
  m.name = "run";
  m.solver.mean_solve_ms = 1.234;
  const auto plain = metrics_csv({m, m});
  const auto timed = metrics_csv({m}, true);
  EXPECT_EQ(csv_lines(plain), 3);
  EXPECT_EQ(plain.find("solve_ms"), std::string::npos);
  EXPECT_NE(timed.find("solve_ms"), std::string::npos);
}

TEST(Metrics, GnuplotScriptNamesTheCsv) {
  const auto gp = gnuplot_script("step.csv", "step");
  EXPECT_NE(gp.find("step.csv"), std::string::npos);
  EXPECT_NE(gp.find("plot"), std::string::npos);
}

TEST(Reference, StepSwitchesAtItsTime) {
  ReferenceConfig cfg;
  std::mt19937_64 rng(1);
  const auto r = generate_reference(cfg, 100, 50, 0.02, rng);
  ASSERT_EQ(r.size(), 150u);
  EXPECT_EQ(r[24].alpha, 0.0);
  EXPECT_DOUBLE_EQ(r[25].alpha, deg2rad(cfg.step_alpha_deg));
  EXPECT_DOUBLE_EQ(r.back().beta, deg2rad(cfg.step_beta_deg));
}

TEST(Reference, RampsRespectRateAndMagnitude) {
  ReferenceConfig cfg;
  cfg.kind = ReferenceKind::kRamp;
  std::mt19937_64 rng(2);
  const double ts = 0.02;
  const auto r = generate_reference(cfg, 1000, 50, ts, rng);
  ASSERT_EQ(r.size(), 1050u);
  for (std::size_t k = 1; k < r.size(); ++k) {
    EXPECT_LE(std::abs(r[k].alpha - r[k - 1].alpha), deg2rad(cfg.max_rate_deg) * ts + 1e-12);
    EXPECT_LE(std::abs(r[k].beta), deg2rad(cfg.max_magnitude_deg) + 1e-12);
  }
}

TEST(Reference, SoftStepsAndSinusoidsAreBounded) {
  std::mt19937_64 rng(3);
  ReferenceConfig cfg;
  cfg.kind = ReferenceKind::kSoftStep;
  const auto soft = generate_reference(cfg, 1000, 0, 0.02, rng);
  double worst_jump = 0.0;
  for (std::size_t k = 1; k < soft.size(); ++k) {
    worst_jump = std::max(worst_jump, std::abs(soft[k].alpha - soft[k - 1].alpha));
  }
  // A full-range soft step never jumps the way a hard step does.
  EXPECT_LT(worst_jump, deg2rad(2.0 * cfg.max_magnitude_deg) / 4.0);

  cfg.kind = ReferenceKind::kSinusoid;
  const auto sine = generate_reference(cfg, 1000, 0, 0.02, rng);
  for (const auto& sp : sine) {
    EXPECT_LE(std::abs(sp.alpha), deg2rad(cfg.sinusoid_amplitude_deg) + 1e-12);
    EXPECT_LE(std::abs(sp.beta), deg2rad(cfg.sinusoid_amplitude_deg) + 1e-12);
  }
}

TEST(Reference, NamesRoundTrip) {
  for (auto k : {ReferenceKind::kStep, ReferenceKind::kRamp, ReferenceKind::kSoftStep,
                 ReferenceKind::kSinusoid, ReferenceKind::kBallCatch}) {
    EXPECT_EQ(parse_reference(to_string(k)), k);
  }
  EXPECT_THROW(parse_reference("zigzag"), std::invalid_argument);
}
