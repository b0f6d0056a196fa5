#include <algorithm>
#include <cmath>
#include <span>

#include <spdlog/spdlog.h>

#include "softarm/planner.hpp"
#include "softarm/sim.hpp"
#include "softarm/sphere.hpp"

namespace softarm::sim {

namespace {

enum Stream : unsigned { kReferenceStream = 1, kArmNoiseStream = 2, kThrowStream = 3,
                         kBallNoiseStream = 4 };

std::mt19937_64 make_rng(unsigned long long seed, unsigned stream, unsigned index = 0) {
  std::seed_seq seq{static_cast<unsigned>(seed & 0xffffffffu),
                    static_cast<unsigned>(seed >> 32), stream, index};
  return std::mt19937_64(seq);
}

// Arm sensor at the plant rate: noisy angles and pressures, rates by backward
// difference of the noisy angles.
class ArmSensor {
 public:
  ArmSensor(const dynamics::TruePlantConfig& plant, double dt, std::mt19937_64 rng)
      : angle_std_(plant.noise_std_angle), pressure_std_(plant.noise_std_pressure),
        dt_(dt), rng_(std::move(rng)) {}

  const ArmState& measure(const ArmState& x) {
    const double alpha = x(idx::kAlpha) + noise(angle_std_);
    const double beta = x(idx::kBeta) + noise(angle_std_);
    if (!has_prev_) {
      prev_alpha_ = alpha;
      prev_beta_ = beta;
      has_prev_ = true;
    }
    z_ << alpha, (alpha - prev_alpha_) / dt_, x(idx::kDpAlpha) + noise(pressure_std_),
        beta, (beta - prev_beta_) / dt_, x(idx::kDpBeta) + noise(pressure_std_);
    prev_alpha_ = alpha;
    prev_beta_ = beta;
    return z_;
  }
  const ArmState& last() const { return z_; }

 private:
  double noise(double std) { return std > 0.0 ? std * gauss_(rng_) : 0.0; }

  double angle_std_;
  double pressure_std_;
  double dt_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  bool has_prev_ = false;
  double prev_alpha_ = 0.0;
  double prev_beta_ = 0.0;
  ArmState z_ = ArmState::Zero();
};

// Everything that runs at the control rate.
struct ControlLoop {
  dynamics::DiscreteModel model;
  estimation::DisturbanceObserver observer;
  mpc::MpcController controller;
  Input u_prev = Input::Zero();
  bool started = false;

  explicit ControlLoop(const Scenario& s)
      : model(dynamics::nominal_discrete(s.model, s.mpc.ts)),
        observer(estimation::build_augmented(model, s.kf)),
        controller(model, s.mpc) {}

  mpc::ControlOutput step(const ArmState& z, std::span<const Setpoint> refs) {
    if (!started) {
      observer.reset(z);
      started = true;
    } else {
      observer.update(u_prev, z);
    }
    mpc::ControlOutput out =
        controller.step(z, u_prev, observer.estimate().d_hat, refs);
    u_prev = out.solution.u0;
    return out;
  }
};

std::vector<std::string> arm_columns() {
  return {"t",         "alpha",      "beta",       "alpha_ref",  "beta_ref",
          "alpha_meas", "beta_meas", "alpha_dot",  "beta_dot",   "dp_alpha",
          "dp_beta",   "u_alpha",    "u_beta",     "d_alpha",    "d_beta",
          "qp_iterations", "fail_safe"};
}

std::vector<double> arm_row(double t, const ArmState& x, const Setpoint& ref,
                            const ArmState& z, const mpc::ControlOutput& out,
                            const Disturbance& d) {
  return {t,
          x(idx::kAlpha),
          x(idx::kBeta),
          ref.alpha,
          ref.beta,
          z(idx::kAlpha),
          z(idx::kBeta),
          x(idx::kAlphaDot),
          x(idx::kBetaDot),
          x(idx::kDpAlpha),
          x(idx::kDpBeta),
          out.solution.u0(0),
          out.solution.u0(1),
          d(idx::kAlphaDot),
          d(idx::kBetaDot),
          static_cast<double>(out.solution.iterations),
          out.solution.fail_safe ? 1.0 : 0.0};
}

allocation::AllocatedInput allocated(const Input& u, double p_bar) {
  return {u(0), u(1), p_bar};
}

double projected_miss(const Vector3& ball, const Vector3& center, double radius,
                      const Setpoint& arm) {
  const Vector3 n = sphere::direction(arm);
  const Vector3 diff = ball - (center + radius * n);
  return (diff - diff.dot(n) * n).norm();
}

}  // namespace

void SolverStats::add(const mpc::MpcSolution& s, double ts) {
  const double n = static_cast<double>(solves);
  mean_solve_ms = (mean_solve_ms * n + s.solve_time_ms) / (n + 1.0);
  max_solve_ms = std::max(max_solve_ms, s.solve_time_ms);
  ++solves;
  if (s.fail_safe) ++failures;
  if (s.warm_started) ++warm_starts;
  iterations += s.iterations;
  max_iterations = std::max(max_iterations, s.iterations);
  if (s.solve_time_ms > ts * 1e3) ++over_budget;
}

void SolverStats::merge(const SolverStats& o) {
  const int total = solves + o.solves;
  if (total > 0) {
    mean_solve_ms = (mean_solve_ms * solves + o.mean_solve_ms * o.solves) / total;
  }
  max_solve_ms = std::max(max_solve_ms, o.max_solve_ms);
  solves = total;
  failures += o.failures;
  warm_starts += o.warm_starts;
  iterations += o.iterations;
  max_iterations = std::max(max_iterations, o.max_iterations);
  over_budget += o.over_budget;
}

double SolverStats::mean_iterations() const {
  return solves > 0 ? static_cast<double>(iterations) / solves : 0.0;
}

TrackingRun run_tracking(const Scenario& scenario) {
  scenario.validate();
  if (scenario.reference.kind == ReferenceKind::kBallCatch) {
    throw std::invalid_argument("run_tracking needs a tracking reference, not ball_catch");
  }
  const double ts = scenario.mpc.ts;
  const int substeps = scenario.plant_substeps;
  const double dt = ts / substeps;
  const int steps = static_cast<int>(std::llround(scenario.duration / ts));
  const int horizon = scenario.mpc.horizon;

  auto ref_rng = make_rng(scenario.seed, kReferenceStream);
  const std::vector<Setpoint> ref =
      generate_reference(scenario.reference, steps, horizon + 1, ts, ref_rng);

  ControlLoop loop(scenario);
  ArmSensor sensor(scenario.plant, dt, make_rng(scenario.seed, kArmNoiseStream));
  ArmState x = ArmState::Zero();
  ArmState z = sensor.measure(x);

  TrackingRun run;
  run.metrics.name = scenario.name;
  run.metrics.mode = scenario.mpc.mode;
  run.metrics.seed = scenario.seed;
  run.log.columns = arm_columns();
  run.log.rows.reserve(static_cast<std::size_t>(steps));

  // Offset window: settle_time after the last reference change.
  int last_change = 0;
  for (int k = 1; k < steps; ++k) {
    if (ref[k].alpha != ref[k - 1].alpha || ref[k].beta != ref[k - 1].beta) last_change = k;
  }
  const double offset_from = last_change * ts + scenario.settle_time;

  double se_a = 0.0, se_b = 0.0;
  int n_rmse = 0;
  double off_a = 0.0, off_b = 0.0;
  int n_off = 0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * ts;
    const auto refs = std::span<const Setpoint>(ref).subspan(static_cast<std::size_t>(k),
                                                             static_cast<std::size_t>(horizon + 1));
    const mpc::ControlOutput out = loop.step(z, refs);
    run.metrics.solver.add(out.solution, ts);

    const double e_a = x(idx::kAlpha) - ref[k].alpha;
    const double e_b = x(idx::kBeta) - ref[k].beta;
    if (t + 1e-12 >= scenario.rmse_start) {
      se_a += e_a * e_a;
      se_b += e_b * e_b;
      ++n_rmse;
    }
    if (t + 1e-12 >= offset_from) {
      off_a += e_a;
      off_b += e_b;
      ++n_off;
    }
    run.log.rows.push_back(arm_row(t, x, ref[k], z, out, loop.observer.estimate().d_hat));

    for (int s = 0; s < substeps; ++s) {
      x = dynamics::step_true_plant(x, allocated(out.solution.u0, scenario.mpc.p_bar),
                                    scenario.plant, t + s * dt, dt);
      z = sensor.measure(x);
    }
  }

  if (n_rmse > 0) {
    run.metrics.rmse_alpha = std::sqrt(se_a / n_rmse);
    run.metrics.rmse_beta = std::sqrt(se_b / n_rmse);
  }
  if (n_off > 0) {
    run.metrics.signed_offset_alpha = off_a / n_off;
    run.metrics.signed_offset_beta = off_b / n_off;
    run.metrics.offset_alpha = std::abs(run.metrics.signed_offset_alpha);
    run.metrics.offset_beta = std::abs(run.metrics.signed_offset_beta);
  } else {
    spdlog::debug("run '{}': no samples after the settle window ({} s)", scenario.name,
                 offset_from);
  }
  if (run.metrics.solver.failures > 0) {
    spdlog::warn("run '{}': {} solver failures", scenario.name, run.metrics.solver.failures);
  }
  return run;
}

Throw synthesize_throw(const ThrowConfig& cfg, std::mt19937_64& rng) {
  auto uniform = [&rng](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double horizontal =
      std::sqrt(cfg.thrower_distance * cfg.thrower_distance -
                cfg.release_height * cfg.release_height);
  const Vector3 release = cfg.sphere_center + Vector3(0.0, -horizontal, cfg.release_height);

  Throw th;
  th.aim = {deg2rad(uniform(cfg.aim_alpha_min_deg, cfg.aim_alpha_max_deg)),
            deg2rad(uniform(-cfg.aim_beta_max_deg, cfg.aim_beta_max_deg))};
  const Vector3 aim_point = cfg.sphere_center + cfg.sphere_radius * sphere::direction(th.aim);
  const double flight = uniform(cfg.flight_time_min, cfg.flight_time_max);
  const Vector3 g(0.0, 0.0, -ball::kGravity);
  Vector3 v0 = (aim_point - release) / flight - 0.5 * g * flight;
  // The thrower leans into a known gust: cancel its drag-free displacement at
  // the aim time.
  const double t1 = std::min(cfg.wind.start, flight);
  const double t2 = std::min(cfg.wind.start + cfg.wind.duration, flight);
  const double drift = 0.5 * ((flight - t1) * (flight - t1) - (flight - t2) * (flight - t2));
  v0 -= wind_gust_profile(cfg.wind, t1) * drift / flight;
  if (cfg.velocity_noise > 0.0) {
    v0 += cfg.velocity_noise * Vector3(gauss(rng), gauss(rng), gauss(rng));
  }
  th.launch = {release, v0, uniform(cfg.drag_min, cfg.drag_max)};
  return th;
}

ball::InterceptPrediction true_intercept(const ThrowConfig& cfg, const ball::BallState& launch) {
  const double dt = ball::kDefaultStep;
  ball::BallVector x = launch.vec();
  const int max_steps = static_cast<int>(std::ceil(cfg.max_flight / dt));
  for (int j = 0; j < max_steps; ++j) {
    const Vector3 wind = wind_gust_profile(cfg.wind, j * dt);
    ball::InterceptPrediction hit = ball::predict_intercept(
        ball::BallState::from_vec(x), cfg.sphere_center, cfg.sphere_radius, dt, dt, wind);
    if (hit.time_to_intercept > 0.0 || hit.valid) {
      hit.time_to_intercept += j * dt;
      return hit;
    }
    if ((x.head<3>() - cfg.sphere_center).norm() <= cfg.sphere_radius) break;
    x = ball::rk4_step(x, dt, wind);
  }
  return {};
}

CatchRun run_catch(const Scenario& scenario, int index) {
  auto throw_rng = make_rng(scenario.seed, kThrowStream, static_cast<unsigned>(index));
  const Throw thrown = synthesize_throw(scenario.ball, throw_rng);
  return run_catch(scenario, thrown, scenario.seed + 0x9e3779b97f4a7c15ULL * (index + 1));
}

CatchRun run_catch(const Scenario& scenario, const Throw& thrown,
                   unsigned long long noise_seed) {
  scenario.validate();
  const ThrowConfig& bc = scenario.ball;
  const double ts = scenario.mpc.ts;
  const int substeps = scenario.plant_substeps;
  const double dt = ts / substeps;
  const int horizon = scenario.mpc.horizon;

  CatchRun run;
  run.metrics.name = scenario.name;
  run.metrics.mode = scenario.mpc.mode;
  run.metrics.seed = scenario.seed;

  const ball::InterceptPrediction truth = true_intercept(bc, thrown.launch);
  run.metrics.intercepting = truth.valid;
  if (!truth.valid) return run;
  run.true_intercept = truth.point;
  run.true_intercept_angles = {truth.alpha, truth.beta};
  run.metrics.intercept_time = truth.time_to_intercept;

  ControlLoop loop(scenario);
  ArmSensor sensor(scenario.plant, dt, make_rng(noise_seed, kArmNoiseStream));
  auto ball_rng = make_rng(noise_seed, kBallNoiseStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto ball_measure = [&](const Vector3& p) {
    if (bc.measurement_noise <= 0.0) return Vector3(p);
    return Vector3(p + bc.measurement_noise *
                           Vector3(gauss(ball_rng), gauss(ball_rng), gauss(ball_rng)));
  };

  const int pre_roll_steps = static_cast<int>(std::llround(bc.pre_roll / ts));
  const double release_time = pre_roll_steps * ts;
  const double end_time = release_time + truth.time_to_intercept;

  ball::BallEkf ekf(scenario.ekf);
  ball::ThrowDetector detector(bc.detect_height, 1.0, 3, dt);
  ball::Snapshot<PredictionSample> latest;
  ball::BallVector ball_x = thrown.launch.vec();

  ArmState x = ArmState::Zero();
  ArmState z = sensor.measure(x);
  detector.update(ball_measure(ball_x.head<3>()));
  Setpoint target;  // last commanded intercept, initially the rest pose
  double prev_tick_time = 0.0;
  Setpoint prev_angles{x(idx::kAlpha), x(idx::kBeta)};
  std::optional<Setpoint> arm_at_intercept;

  run.log.columns = arm_columns();
  for (const char* c : {"ball_x", "ball_y", "ball_z", "pred_alpha", "pred_beta", "pred_valid"}) {
    run.log.columns.emplace_back(c);
  }

  for (int k = 0; !arm_at_intercept; ++k) {
    const double t = k * ts;
    if (t > end_time + 1.0) break;  // cannot happen for a finite intercept time

    const auto snap = latest.latest();
    if (snap && snap->prediction.valid) {
      target = {snap->prediction.alpha, snap->prediction.beta};
    }
    const Setpoint here{z(idx::kAlpha), z(idx::kBeta)};
    std::vector<Setpoint> refs;
    if (sphere::in_chart(here) && sphere::in_chart(target)) {
      refs = planner::plan(here, target, scenario.planner_omega, ts, horizon).setpoints;
    } else {
      refs.assign(static_cast<std::size_t>(horizon + 1), target);
    }
    const mpc::ControlOutput out = loop.step(z, refs);
    run.metrics.solver.add(out.solution, ts);

    std::vector<double> row = arm_row(t, x, refs.front(), z, out,
                                      loop.observer.estimate().d_hat);
    row.insert(row.end(), {ball_x(0), ball_x(1), ball_x(2),
                           snap ? snap->prediction.alpha : 0.0,
                           snap ? snap->prediction.beta : 0.0,
                           snap && snap->prediction.valid ? 1.0 : 0.0});
    run.log.rows.push_back(std::move(row));

    for (int s = 0; s < substeps; ++s) {
      const double tick = t + s * dt;
      x = dynamics::step_true_plant(x, allocated(out.solution.u0, scenario.mpc.p_bar),
                                    scenario.plant, tick, dt);
      z = sensor.measure(x);
      const double now = tick + dt;
      const Setpoint angles{x(idx::kAlpha), x(idx::kBeta)};
      if (!arm_at_intercept && now + 1e-12 >= end_time) {
        const double w = std::clamp((end_time - prev_tick_time) / dt, 0.0, 1.0);
        arm_at_intercept = Setpoint{prev_angles.alpha + w * (angles.alpha - prev_angles.alpha),
                                    prev_angles.beta + w * (angles.beta - prev_angles.beta)};
      }
      prev_tick_time = now;
      prev_angles = angles;

      if (tick + 1e-12 < release_time) continue;
      const double since_release = tick - release_time;
      ball_x = ball::rk4_step(ball_x, dt, wind_gust_profile(bc.wind, since_release));
      const Vector3 zb = ball_measure(ball_x.head<3>());
      const bool was_detected = detector.detected();
      if (!detector.update(zb)) continue;
      if (!was_detected) {
        ekf.initialize(zb, detector.velocity());
      } else {
        ekf.step(zb);
      }
      PredictionSample sample;
      sample.t = since_release + dt;
      sample.estimated_position = ekf.state().position;
      sample.prediction = ball::predict_intercept(ekf.state(), bc.sphere_center,
                                                  bc.sphere_radius, bc.max_flight);
      if (sample.t < truth.time_to_intercept) run.predictions.push_back(sample);
      latest.publish(sample);
    }
  }

  if (!arm_at_intercept) return run;
  run.metrics.miss_distance =
      projected_miss(truth.point, bc.sphere_center, bc.sphere_radius, *arm_at_intercept);
  run.metrics.caught = run.metrics.miss_distance <= bc.net_radius;
  for (auto it = run.predictions.rbegin(); it != run.predictions.rend(); ++it) {
    if (it->prediction.valid) {
      run.metrics.final_prediction_error = (it->prediction.point - truth.point).norm();
      break;
    }
  }
  return run;
}

CatchBatch run_catch_batch(const Scenario& scenario, int intercepting_throws) {
  CatchBatch batch;
  double miss_sum = 0.0;
  const int max_attempts = 4 * std::max(intercepting_throws, 1);
  for (int i = 0; batch.intercepting < intercepting_throws && i < max_attempts; ++i) {
    ++batch.attempted;
    auto throw_rng = make_rng(scenario.seed, kThrowStream, static_cast<unsigned>(i));
    const Throw thrown = synthesize_throw(scenario.ball, throw_rng);
    if (!true_intercept(scenario.ball, thrown.launch).valid) continue;
    ++batch.intercepting;
    CatchRun r = run_catch(scenario, thrown, scenario.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    batch.solver.merge(r.metrics.solver);
    if (r.metrics.caught) {
      ++batch.caught;
      miss_sum += r.metrics.miss_distance;
    }
    batch.runs.push_back(std::move(r.metrics));
  }
  if (batch.caught > 0) batch.mean_miss = miss_sum / batch.caught;
  return batch;
}

}  // namespace softarm::sim
