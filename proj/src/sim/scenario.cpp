#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "softarm/sim.hpp"

namespace softarm::sim {

std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::kStep: return "step";
    case ReferenceKind::kRamp: return "ramp";
    case ReferenceKind::kSoftStep: return "soft_step";
    case ReferenceKind::kSinusoid: return "sinusoid";
    case ReferenceKind::kBallCatch: return "ball_catch";
  }
  return "step";
}

ReferenceKind parse_reference(std::string_view text) {
  for (auto kind : {ReferenceKind::kStep, ReferenceKind::kRamp, ReferenceKind::kSoftStep,
                    ReferenceKind::kSinusoid, ReferenceKind::kBallCatch}) {
    if (text == to_string(kind)) return kind;
  }
  throw std::invalid_argument(fmt::format(
      "unknown reference '{}' (step|ramp|soft_step|sinusoid|ball_catch)", text));
}

Scenario Scenario::defaults() {
  Scenario s;
  // Mismatch plant: nominal linear part, cross-axis coupling at large angles
  // and a slowly building relaxation torque on alpha.
  s.plant.base = s.model;
  s.plant.coupling_gain = 40.0;
  s.plant.relaxation_amplitude = 30.0;
  s.plant.relaxation_timescale = 1.0;
  s.plant.noise_std_angle = 5e-5;
  s.plant.noise_std_pressure = 1e-3;
  // Faster disturbance estimate than the library default (about 1 Hz).
  for (int i = 0; i < kNumStates; ++i) s.kf.q_proc(kNumStates + i, kNumStates + i) = 1e-2;
  return s;
}

KeyValueConfig Scenario::to_config() const {
  KeyValueConfig cfg;
  cfg.set("scenario.name", name);
  cfg.set("scenario.duration", duration);
  cfg.set("scenario.settle_time", settle_time);
  cfg.set("scenario.rmse_start", rmse_start);
  cfg.set("scenario.plant_substeps", std::to_string(plant_substeps));
  cfg.set("scenario.seed", std::to_string(seed));
  cfg.set("planner.omega_deg", rad2deg(planner_omega));
  plant.to_config(cfg);
  model.to_config(cfg, "model.");
  mpc.to_config(cfg);
  kf.to_config(cfg);
  ekf.to_config(cfg);

  cfg.set("reference.kind", std::string(sim::to_string(reference.kind)));
  cfg.set("reference.step_alpha_deg", reference.step_alpha_deg);
  cfg.set("reference.step_beta_deg", reference.step_beta_deg);
  cfg.set("reference.step_time", reference.step_time);
  cfg.set("reference.max_magnitude_deg", reference.max_magnitude_deg);
  cfg.set("reference.min_rate_deg", reference.min_rate_deg);
  cfg.set("reference.max_rate_deg", reference.max_rate_deg);
  cfg.set("reference.hold", reference.hold);
  cfg.set("reference.soft_step_time", reference.soft_step_time);
  cfg.set("reference.min_frequency", reference.min_frequency);
  cfg.set("reference.max_frequency", reference.max_frequency);
  cfg.set("reference.sinusoid_amplitude_deg", reference.sinusoid_amplitude_deg);
  cfg.set("reference.sinusoid_segment", reference.sinusoid_segment);

  cfg.set("ball.sphere_radius", ball.sphere_radius);
  cfg.set("ball.net_radius", ball.net_radius);
  cfg.set("ball.thrower_distance", ball.thrower_distance);
  cfg.set("ball.release_height", ball.release_height);
  cfg.set("ball.aim_alpha_min_deg", ball.aim_alpha_min_deg);
  cfg.set("ball.aim_alpha_max_deg", ball.aim_alpha_max_deg);
  cfg.set("ball.aim_beta_max_deg", ball.aim_beta_max_deg);
  cfg.set("ball.flight_time_min", ball.flight_time_min);
  cfg.set("ball.flight_time_max", ball.flight_time_max);
  cfg.set("ball.velocity_noise", ball.velocity_noise);
  cfg.set("ball.drag_min", ball.drag_min);
  cfg.set("ball.drag_max", ball.drag_max);
  cfg.set("ball.measurement_noise", ball.measurement_noise);
  cfg.set("ball.pre_roll", ball.pre_roll);
  cfg.set("ball.max_flight", ball.max_flight);
  cfg.set("ball.detect_height", ball.detect_height);
  cfg.set("wind.magnitude", ball.wind.magnitude);
  cfg.set("wind.start", ball.wind.start);
  cfg.set("wind.duration", std::isfinite(ball.wind.duration) ? format_number(ball.wind.duration)
                                                             : std::string("inf"));
  return cfg;
}

Scenario Scenario::from_config(const KeyValueConfig& cfg) {
  // Typos in scenario files would otherwise fall back to defaults silently.
  static const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const KeyValueConfig reference = defaults().to_config();
    for (const auto& [k, v] : reference.entries()) keys.insert(k);
    return keys;
  }();
  for (const auto& [key, value] : cfg.entries()) {
    if (!known.count(key)) cfg.reject(key, "unknown key");
  }

  Scenario s = defaults();
  s.name = cfg.get_string("scenario.name", s.name);
  s.duration = cfg.get_double("scenario.duration", s.duration);
  s.settle_time = cfg.get_double("scenario.settle_time", s.settle_time);
  s.rmse_start = cfg.get_double("scenario.rmse_start", s.rmse_start);
  s.plant_substeps =
      static_cast<int>(cfg.get_int("scenario.plant_substeps", s.plant_substeps));
  const long long seed = cfg.get_int("scenario.seed", static_cast<long long>(s.seed));
  if (seed < 0) throw ConfigError("scenario.seed must be nonnegative");
  s.seed = static_cast<unsigned long long>(seed);
  s.planner_omega = deg2rad(cfg.get_double("planner.omega_deg", rad2deg(s.planner_omega)));

  // Plant keys overlay the mismatch defaults rather than the plain model.
  KeyValueConfig plant_cfg;
  s.plant.to_config(plant_cfg);
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("plant.", 0) == 0) plant_cfg.set(key, value);
  }
  s.plant = dynamics::TruePlantConfig::from_config(plant_cfg);
  s.model = dynamics::ModelParams::from_config(cfg, "model.");
  s.mpc = mpc::MpcConfig::from_config(cfg);
  KeyValueConfig kf_cfg;
  s.kf.to_config(kf_cfg);
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("kf.", 0) == 0) kf_cfg.set(key, value);
  }
  s.kf = estimation::NoiseConfig::from_config(kf_cfg);
  s.ekf = ball::EkfConfig::from_config(cfg);

  auto& r = s.reference;
  r.kind = parse_reference(cfg.get_string("reference.kind", std::string(sim::to_string(r.kind))));
  r.step_alpha_deg = cfg.get_double("reference.step_alpha_deg", r.step_alpha_deg);
  r.step_beta_deg = cfg.get_double("reference.step_beta_deg", r.step_beta_deg);
  r.step_time = cfg.get_double("reference.step_time", r.step_time);
  r.max_magnitude_deg = cfg.get_double("reference.max_magnitude_deg", r.max_magnitude_deg);
  r.min_rate_deg = cfg.get_double("reference.min_rate_deg", r.min_rate_deg);
  r.max_rate_deg = cfg.get_double("reference.max_rate_deg", r.max_rate_deg);
  r.hold = cfg.get_double("reference.hold", r.hold);
  r.soft_step_time = cfg.get_double("reference.soft_step_time", r.soft_step_time);
  r.min_frequency = cfg.get_double("reference.min_frequency", r.min_frequency);
  r.max_frequency = cfg.get_double("reference.max_frequency", r.max_frequency);
  r.sinusoid_amplitude_deg =
      cfg.get_double("reference.sinusoid_amplitude_deg", r.sinusoid_amplitude_deg);
  r.sinusoid_segment = cfg.get_double("reference.sinusoid_segment", r.sinusoid_segment);

  auto& b = s.ball;
  b.sphere_radius = cfg.get_double("ball.sphere_radius", b.sphere_radius);
  b.net_radius = cfg.get_double("ball.net_radius", b.net_radius);
  b.thrower_distance = cfg.get_double("ball.thrower_distance", b.thrower_distance);
  b.release_height = cfg.get_double("ball.release_height", b.release_height);
  b.aim_alpha_min_deg = cfg.get_double("ball.aim_alpha_min_deg", b.aim_alpha_min_deg);
  b.aim_alpha_max_deg = cfg.get_double("ball.aim_alpha_max_deg", b.aim_alpha_max_deg);
  b.aim_beta_max_deg = cfg.get_double("ball.aim_beta_max_deg", b.aim_beta_max_deg);
  b.flight_time_min = cfg.get_double("ball.flight_time_min", b.flight_time_min);
  b.flight_time_max = cfg.get_double("ball.flight_time_max", b.flight_time_max);
  b.velocity_noise = cfg.get_double("ball.velocity_noise", b.velocity_noise);
  b.drag_min = cfg.get_double("ball.drag_min", b.drag_min);
  b.drag_max = cfg.get_double("ball.drag_max", b.drag_max);
  b.measurement_noise = cfg.get_double("ball.measurement_noise", b.measurement_noise);
  b.pre_roll = cfg.get_double("ball.pre_roll", b.pre_roll);
  b.max_flight = cfg.get_double("ball.max_flight", b.max_flight);
  b.detect_height = cfg.get_double("ball.detect_height", b.detect_height);
  b.wind.magnitude = cfg.get_double("wind.magnitude", b.wind.magnitude);
  b.wind.start = cfg.get_double("wind.start", b.wind.start);
  if (cfg.get_string("wind.duration", "inf") != "inf") {
    b.wind.duration = cfg.get_double("wind.duration", b.wind.duration);
  }

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

void Scenario::validate() const {
  plant.validate();
  model.validate();
  mpc.validate();
  kf.validate();
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("{} must be positive (got {})", what, v));
    }
  };
  positive(duration, "scenario.duration");
  if (settle_time < 0.0) throw std::invalid_argument("scenario.settle_time must be >= 0");
  if (plant_substeps < 4) {
    throw std::invalid_argument("scenario.plant_substeps must be at least 4");
  }
  positive(planner_omega, "planner.omega_deg");
  positive(reference.min_rate_deg, "reference.min_rate_deg");
  if (reference.max_rate_deg < reference.min_rate_deg) {
    throw std::invalid_argument("reference.max_rate_deg below reference.min_rate_deg");
  }
  positive(reference.min_frequency, "reference.min_frequency");
  if (reference.max_frequency < reference.min_frequency) {
    throw std::invalid_argument("reference.max_frequency below reference.min_frequency");
  }
  positive(reference.soft_step_time, "reference.soft_step_time");
  positive(reference.sinusoid_segment, "reference.sinusoid_segment");
  if (reference.hold < 0.0) throw std::invalid_argument("reference.hold must be >= 0");

  positive(ball.sphere_radius, "ball.sphere_radius");
  positive(ball.net_radius, "ball.net_radius");
  if (!(ball.thrower_distance > ball.sphere_radius)) {
    throw std::invalid_argument("ball.thrower_distance must exceed the sphere radius");
  }
  if (std::abs(ball.release_height) >= ball.thrower_distance) {
    throw std::invalid_argument("ball.release_height must be below ball.thrower_distance");
  }
  positive(ball.flight_time_min, "ball.flight_time_min");
  if (ball.flight_time_max < ball.flight_time_min) {
    throw std::invalid_argument("ball.flight_time_max below ball.flight_time_min");
  }
  if (ball.drag_min < 0.0 || ball.drag_max < ball.drag_min) {
    throw std::invalid_argument("ball drag range invalid");
  }
  if (ball.velocity_noise < 0.0 || ball.measurement_noise < 0.0) {
    throw std::invalid_argument("ball noise must be nonnegative");
  }
  if (ball.pre_roll < 0.0) throw std::invalid_argument("ball.pre_roll must be >= 0");
  positive(ball.max_flight, "ball.max_flight");
  const double tick = mpc.ts / plant_substeps;
  if (std::abs(tick - ekf.step) > 1e-12) {
    throw std::invalid_argument(fmt::format(
        "sensor period {} s (mpc.ts / plant_substeps) must equal the ball EKF step {} s",
        tick, ekf.step));
  }
}

}  // namespace softarm::sim
