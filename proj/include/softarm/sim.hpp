#pragma once

#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "softarm/ball.hpp"
#include "softarm/config.hpp"
#include "softarm/dynamics.hpp"
#include "softarm/estimation.hpp"
#include "softarm/mpc.hpp"
#include "softarm/types.hpp"

namespace softarm::sim {

enum class ReferenceKind { kStep, kRamp, kSoftStep, kSinusoid, kBallCatch };

std::string_view to_string(ReferenceKind kind);
/// Accepts step, ramp, soft_step, sinusoid, ball_catch.
ReferenceKind parse_reference(std::string_view text);

struct ReferenceConfig {
  ReferenceKind kind = ReferenceKind::kStep;
  /// Step target [deg]; the step happens at `step_time`.
  double step_alpha_deg = 15.0;
  double step_beta_deg = -10.0;
  double step_time = 0.5;
  /// Random segments: targets uniform in [-max, max] per axis [deg].
  double max_magnitude_deg = 30.0;
  double min_rate_deg = 60.0;   ///< ramp rate range [deg/s]
  double max_rate_deg = 300.0;
  double hold = 1.5;             ///< dwell after each ramp / soft step [s]
  double soft_step_time = 0.4;   ///< quintic blend duration [s]
  double min_frequency = 0.5;    ///< sinusoid band [Hz]
  double max_frequency = 3.0;
  double sinusoid_amplitude_deg = 10.0;
  double sinusoid_segment = 3.0;  ///< duration of one sinusoid segment [s]
};

/// Setpoints at t = k ts for k = 0 .. steps + preview - 1. Random segments
/// draw from `rng`.
std::vector<Setpoint> generate_reference(const ReferenceConfig& cfg, int steps,
                                         int preview, double ts, std::mt19937_64& rng);

/// Piecewise-constant +x acceleration on the ball [m/s^2], active on
/// [start, start + duration) measured from release.
struct WindGust {
  double magnitude = 0.0;
  double start = 0.0;
  double duration = std::numeric_limits<double>::infinity();
};

Vector3 wind_gust_profile(const WindGust& gust, double t_since_release);

struct ThrowConfig {
  Vector3 sphere_center = Vector3::Zero();
  double sphere_radius = 0.4;       ///< [m]
  double net_radius = 0.031;        ///< success disc radius [m]
  double thrower_distance = 2.0;    ///< release point distance from the center [m]
  double release_height = 0.3;      ///< [m] above the center
  double aim_alpha_min_deg = 5.0;   ///< aim point range on the sphere
  double aim_alpha_max_deg = 35.0;
  double aim_beta_max_deg = 25.0;
  double flight_time_min = 0.55;    ///< drag-free time to the aim point [s]
  double flight_time_max = 0.75;
  double velocity_noise = 0.05;     ///< per-axis launch velocity spread [m/s]
  double drag_min = 0.01;           ///< true K_D range [1/m]
  double drag_max = 0.03;
  double measurement_noise = 1e-3;  ///< ball position noise std [m]
  double pre_roll = 3.0;            ///< arm settling time before release [s]
  double max_flight = 2.0;          ///< [s]
  double detect_height = 0.0;       ///< throw detector height threshold [m]
  WindGust wind;
};

struct Scenario {
  std::string name = "scenario";
  dynamics::TruePlantConfig plant;
  dynamics::ModelParams model;  ///< nominal model used by the controller
  mpc::MpcConfig mpc = mpc::MpcConfig::defaults();
  estimation::NoiseConfig kf = estimation::NoiseConfig::defaults();
  ball::EkfConfig ekf;
  ReferenceConfig reference;
  ThrowConfig ball;
  double planner_omega = 4.1887902047863905;  ///< [rad/s]
  double duration = 10.0;      ///< tracking runs [s]
  double settle_time = 5.0;    ///< offset window starts this long after the last reference change [s]
  double rmse_start = 0.0;     ///< RMSE ignores samples before this time [s]
  int plant_substeps = 4;      ///< plant/sensor ticks per control period
  unsigned long long seed = 1;

  /// Mismatch plant used by the shipped scenarios and the acceptance suite.
  static Scenario defaults();
  /// Overlays `scenario.*`, `plant.*`, `model.*`, `mpc.*`, `kf.*`, `ekf.*`,
  /// `reference.*`, `ball.*`, `wind.*` keys on the defaults.
  static Scenario from_config(const KeyValueConfig& cfg);
  static Scenario load(const std::filesystem::path& path);
  KeyValueConfig to_config() const;
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct SolverStats {
  int solves = 0;
  int failures = 0;         ///< fail-safe steps (previous input reused)
  int warm_starts = 0;
  long long iterations = 0;
  int max_iterations = 0;
  double mean_solve_ms = 0.0;  ///< wall clock, excluded from deterministic output
  double max_solve_ms = 0.0;
  int over_budget = 0;         ///< solves slower than Ts

  void add(const mpc::MpcSolution& s, double ts);
  void merge(const SolverStats& other);
  double mean_iterations() const;
};

struct RunMetrics {
  std::string name;
  mpc::Mode mode = mpc::Mode::kOffsetFree;
  unsigned long long seed = 0;
  double rmse_alpha = 0.0;   ///< [rad]
  double rmse_beta = 0.0;
  double offset_alpha = 0.0;  ///< |mean error| over the settled window [rad]
  double offset_beta = 0.0;
  double signed_offset_alpha = 0.0;
  double signed_offset_beta = 0.0;
  SolverStats solver;
  // Ball catching; the miss distance is defined only for intercepting throws.
  bool intercepting = false;
  bool caught = false;
  double miss_distance = std::numeric_limits<double>::quiet_NaN();  ///< [m]
  double intercept_time = std::numeric_limits<double>::quiet_NaN();  ///< after release [s]
  double final_prediction_error = std::numeric_limits<double>::quiet_NaN();  ///< [m]

  double rmse_mean() const { return 0.5 * (rmse_alpha + rmse_beta); }
  double max_offset() const { return std::max(offset_alpha, offset_beta); }
};

/// Time-indexed run record; `columns` names each entry of a row.
struct RunLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
};

struct TrackingRun {
  RunMetrics metrics;
  RunLog log;
};

/// Closed-loop tracking at the control rate over the plant at the sensor rate.
TrackingRun run_tracking(const Scenario& scenario);

/// One entry per ball-estimator update after detection.
struct PredictionSample {
  double t = 0.0;  ///< after release [s]
  ball::InterceptPrediction prediction;
  Vector3 estimated_position = Vector3::Zero();
};

struct CatchRun {
  RunMetrics metrics;
  RunLog log;
  std::vector<PredictionSample> predictions;
  Vector3 true_intercept = Vector3::Zero();
  Setpoint true_intercept_angles;
};

/// Launch state of one synthesized throw.
struct Throw {
  ball::BallState launch;  ///< position, velocity, true K_D
  Setpoint aim;
};

Throw synthesize_throw(const ThrowConfig& cfg, std::mt19937_64& rng);

/// True intercept of a throw (integrated with the wind profile); `valid`
/// false for throws that never meet the sphere inside the angle chart.
ball::InterceptPrediction true_intercept(const ThrowConfig& cfg, const ball::BallState& launch);

/// Pre-roll, throw, estimation, planning and control. Throw index `index`
/// uses its own random stream derived from the scenario seed.
CatchRun run_catch(const Scenario& scenario, int index = 0);
/// Catch run for a given throw (deterministic noise from the scenario seed).
CatchRun run_catch(const Scenario& scenario, const Throw& thrown,
                   unsigned long long noise_seed);

struct CatchBatch {
  int attempted = 0;
  int intercepting = 0;
  int caught = 0;
  double mean_miss = std::numeric_limits<double>::quiet_NaN();  ///< over catches [m]
  SolverStats solver;
  std::vector<RunMetrics> runs;

  double success_rate() const {
    return intercepting > 0 ? static_cast<double>(caught) / intercepting : 0.0;
  }
};

/// Draws throws until `intercepting_throws` intercepting ones have been run
/// (giving up after 4x as many attempts); excluded throws are not simulated.
CatchBatch run_catch_batch(const Scenario& scenario, int intercepting_throws);

/// Metrics summary; wall-clock timing only with `include_timing`.
std::string metrics_csv(const std::vector<RunMetrics>& runs, bool include_timing = false);

/// gnuplot script plotting the angle columns of `csv_name` against their
/// references.
std::string gnuplot_script(const std::string& csv_name, const std::string& title);

}  // namespace softarm::sim
