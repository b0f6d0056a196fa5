#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "softarm/allocation.hpp"
#include "softarm/estimation.hpp"
#include "softarm/mpc.hpp"
#include "softarm/planner.hpp"
#include "softarm/sphere.hpp"
#include "softarm/verify.hpp"

namespace softarm::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
CheckResult timed(std::string name, F&& body) {
  const auto t0 = Clock::now();
  CheckResult r;
  r.name = std::move(name);
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = fmt::format("threw: {}", e.what());
  }
  r.seconds = seconds_since(t0);
  return r;
}

double sphere_angle(const Vector3& a, const Vector3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

dynamics::ModelParams random_params(std::mt19937_64& rng) {
  auto u = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  dynamics::ModelParams p;
  for (auto* axis : {&p.alpha, &p.beta}) {
    axis->k = u(100, 400);
    axis->d = u(2, 12);
    axis->h = u(300, 700);
    axis->tau = u(0.02, 0.1);
    axis->c = u(-0.05, 0.05);
  }
  return p;
}

// --- property checks -----------------------------------------------------

CheckResult xi_round_trip() {
  return timed("allocation round trip", [](CheckResult& r) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pressure(1.0, 1.9), diff(-0.8, 0.8);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const allocation::ActuatorPressures p{pressure(rng), pressure(rng), pressure(rng)};
      const auto back = allocation::xi_inv(allocation::xi(p));
      worst = std::max({worst, std::abs(back.p_a - p.p_a), std::abs(back.p_b - p.p_b),
                        std::abs(back.p_c - p.p_c)});
      const allocation::AllocatedInput v{diff(rng), diff(rng), pressure(rng)};
      const auto again = allocation::xi(allocation::xi_inv(v));
      worst = std::max({worst, std::abs(again.dp_alpha - v.dp_alpha),
                        std::abs(again.dp_beta - v.dp_beta), std::abs(again.p_bar - v.p_bar)});
    }
    r.passed = worst <= 1e-12;
    r.detail = fmt::format("max error {:.2e} (limit 1e-12)", worst);
  });
}

CheckResult polytope_grid() {
  return timed("polytope vs pressure-box grid", [](CheckResult& r) {
    const double p_min = allocation::kDefaultPMin, p_max = allocation::kDefaultPMax,
                 p_bar = allocation::kDefaultPBar;
    const auto poly = allocation::build_input_polytope(p_min, p_max, p_bar);
    int mismatches = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Vector2 u(-1.2 + 2.4 * i / (n - 1), -1.2 + 2.4 * j / (n - 1));
        if (poly.contains(u) != pressure_box_contains(u, p_min, p_max, p_bar)) ++mismatches;
      }
    }
    r.passed = mismatches == 0;
    r.detail = fmt::format("{} of {} grid points disagree", mismatches, n * n);
  });
}

CheckResult discretization() {
  return timed("discretization vs fine-step RK4", [](CheckResult& r) {
    std::mt19937_64 rng(12);
    double worst = 0.0;
    for (int trial = 0; trial < 11; ++trial) {
      const auto params = trial == 0 ? dynamics::ModelParams{} : random_params(rng);
      const auto cont = dynamics::build_continuous(params);
      const double ts = 0.02;
      const auto exact = dynamics::discretize(cont, ts);
      const auto fine = rk4_discretize(cont, ts, 1000);
      worst = std::max({worst, (exact.a - fine.a).cwiseAbs().maxCoeff(),
                        (exact.b - fine.b).cwiseAbs().maxCoeff(),
                        (exact.e - fine.e).cwiseAbs().maxCoeff()});
    }
    r.passed = worst <= 1e-8;
    r.detail = fmt::format("max entry error {:.2e} over 11 models (limit 1e-8)", worst);
  });
}

CheckResult dare() {
  return timed("DARE scalar oracle and filter stability", [](CheckResult& r) {
    Eigen::MatrixXd a(1, 1), c(1, 1), q(1, 1), rr(1, 1);
    a << 0.9;
    c << 1.0;
    q << 1.0;
    rr << 1.0;
    const auto sol = estimation::solve_dare(a, c, q, rr);
    const double oracle = scalar_dare_bisection(0.9, 1.0, 1.0, 1.0);
    const double err = std::abs(sol.p(0, 0) - oracle);

    const auto scenario = sim::Scenario::defaults();
    const auto model = dynamics::nominal_discrete(scenario.model, scenario.mpc.ts);
    const auto aug = estimation::build_augmented(model, scenario.kf);
    const double rho = estimation::spectral_radius(aug.a_hat);
    const auto lib = estimation::build_augmented(model, estimation::NoiseConfig::defaults());
    const double rho_lib = estimation::spectral_radius(lib.a_hat);
    r.passed = err <= 1e-10 && rho < 1.0 && rho_lib < 1.0;
    r.detail = fmt::format("|P - oracle| {:.2e}, spectral radius {:.4f} (scenario) {:.4f} (library)",
                           err, rho, rho_lib);
  });
}

CheckResult target_plug_back() {
  return timed("target plug-back", [](CheckResult& r) {
    const auto model = dynamics::nominal_discrete({}, 0.02);
    const tracking::TargetSolver solver(model);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> angle(-0.6, 0.6), dist(-5.0, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Setpoint sp{angle(rng), angle(rng)};
      Disturbance d;
      for (int j = 0; j < kNumStates; ++j) d(j) = dist(rng);
      worst = std::max(worst, target_residual(model, solver.solve(sp, d), sp, d));
    }
    r.passed = worst <= 1e-8;
    r.detail = fmt::format("max residual {:.2e} over 100 cases (limit 1e-8)", worst);
  });
}

CheckResult qp_vs_lqr() {
  return timed("unconstrained QP vs LQ Riccati", [](CheckResult& r) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto model = dynamics::nominal_discrete({}, 0.02);
    double worst = 0.0;
    for (int n = 1; n <= 10; ++n) {
      auto cfg = mpc::MpcConfig::defaults();
      cfg.horizon = n;
      cfg.constrained = false;
      cfg.r_d.setZero();
      ArmState x0;
      Disturbance d;
      for (int j = 0; j < kNumStates; ++j) {
        x0(j) = 0.3 * u(rng);
        d(j) = u(rng);
      }
      std::vector<tracking::TargetPair> targets(static_cast<std::size_t>(n + 1));
      for (auto& t : targets) {
        for (int j = 0; j < kNumStates; ++j) t.x_bar(j) = 0.3 * u(rng);
        t.u_bar = {0.3 * u(rng), 0.3 * u(rng)};
      }
      const auto data = mpc::build_qp(model, x0, Input::Zero(), d, targets, cfg);
      const auto sol = mpc::solve_qp(data, cfg.solver);
      const Input lq = lq_tracking_first_input(model, cfg.q, cfg.r, cfg.p, x0, d, targets);
      worst = std::max(worst, (sol.x.head<2>() - lq).cwiseAbs().maxCoeff());
    }
    r.passed = worst <= 1e-6;
    r.detail = fmt::format("max first-input gap {:.2e} for N = 1..10 (limit 1e-6)", worst);
  });
}

CheckResult ekf_jacobian() {
  return timed("ball Jacobian vs finite differences", [](CheckResult& r) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      ball::BallVector x;
      x << u(rng), u(rng), u(rng), 5.0 * u(rng), 5.0 * u(rng), 5.0 * u(rng),
          0.025 + 0.02 * u(rng);
      const Eigen::MatrixXd fd = central_difference(
          [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
            return ball::rk4_step(ball::BallVector(v), ball::kDefaultStep);
          },
          x, 1e-5);
      worst = std::max(worst, (ball::rk4_jacobian(x, ball::kDefaultStep) - fd).cwiseAbs().maxCoeff());
    }
    r.passed = worst <= 1e-6;
    r.detail = fmt::format("max entry gap {:.2e} at 50 states (limit 1e-6)", worst);
  });
}

CheckResult drag_recovery() {
  return timed("drag coefficient recovery", [](CheckResult& r) {
    const double k_true = 0.04;
    ball::BallVector truth;
    truth << 0.0, -1.9, 0.3, 0.0, 3.5, 4.0, k_true;
    // Noiseless truth: process noise matched to it, default measurement noise.
    ball::EkfConfig cfg;
    cfg.q_position = 1e-8;
    cfg.q_velocity = 1e-8;
    ball::BallEkf ekf(cfg);
    ekf.initialize(truth.head<3>(), truth.segment<3>(3));
    const int steps = static_cast<int>(std::lround(0.3 / ball::kDefaultStep));
    for (int i = 0; i < steps; ++i) {
      truth = ball::rk4_step(truth, ball::kDefaultStep);
      ekf.step(truth.head<3>());
    }
    const double rel = std::abs(ekf.state().k_d - k_true) / k_true;
    r.passed = rel <= 0.05;
    r.detail = fmt::format("K_D {:.5f} vs {:.5f} after 0.3 s ({:.2f}% error, limit 5%)",
                           ekf.state().k_d, k_true, 100.0 * rel);
  });
}

CheckResult planner_spacing() {
  return timed("planner spacing and velocity bound", [](CheckResult& r) {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> angle(deg2rad(-60.0), deg2rad(60.0));
    const double omega = planner::kDefaultOmega, ts = 0.02;
    double spacing = 0.0, excess = -1.0;
    for (int i = 0; i < 200; ++i) {
      const Setpoint a{angle(rng), angle(rng)}, b{angle(rng), angle(rng)};
      const auto plan = planner::plan(a, b, omega, ts, 50);
      const double theta = sphere_angle(sphere::direction(a), sphere::direction(b));
      const int m = plan.segments;
      for (std::size_t k = 0; k + 1 < plan.setpoints.size(); ++k) {
        const double step = sphere_angle(sphere::direction(plan.setpoints[k]),
                                         sphere::direction(plan.setpoints[k + 1]));
        excess = std::max(excess, step - omega * ts);
        if (static_cast<int>(k) < m) spacing = std::max(spacing, std::abs(step - theta / m));
      }
    }
    r.passed = spacing <= 1e-9 && excess <= 1e-9;
    r.detail = fmt::format("max spacing error {:.2e}, max step above omega Ts {:.2e} rad", spacing,
                           excess);
  });
}

CheckResult determinism() {
  return timed("determinism", [](CheckResult& r) {
    auto s = sim::Scenario::defaults();
    s.reference.kind = sim::ReferenceKind::kSinusoid;
    s.duration = 3.0;
    const auto a = sim::run_tracking(s);
    const auto b = sim::run_tracking(s);
    const bool tracking_same = a.log.to_csv() == b.log.to_csv() &&
                               sim::metrics_csv({a.metrics}) == sim::metrics_csv({b.metrics});
    const auto c = sim::run_catch(s, 1);
    const auto d = sim::run_catch(s, 1);
    const bool catch_same = c.log.to_csv() == d.log.to_csv() &&
                            sim::metrics_csv({c.metrics}) == sim::metrics_csv({d.metrics});
    r.passed = tracking_same && catch_same;
    r.detail = fmt::format("tracking logs {}, catch logs {}", tracking_same ? "identical" : "DIFFER",
                           catch_same ? "identical" : "DIFFER");
  });
}

std::string percent(double v) { return fmt::format("{:.1f}%", 100.0 * v); }

double averaged_rmse(const std::vector<sim::RunMetrics>& runs) {
  double sum = 0.0;
  for (const auto& m : runs) sum += m.rmse_mean();
  return runs.empty() ? 0.0 : sum / static_cast<double>(runs.size());
}

}  // namespace

std::vector<CheckResult> property_checks() {
  return {xi_round_trip(), polytope_grid(),   discretization(), dare(),
          target_plug_back(), qp_vs_lqr(),    ekf_jacobian(),   drag_recovery(),
          planner_spacing(), determinism()};
}

CheckResult offset_elimination(const AcceptanceOptions& opts) {
  return timed("offset elimination", [&opts](CheckResult& r) {
    auto s = opts.base;
    s.reference.kind = sim::ReferenceKind::kStep;
    s.mpc.mode = mpc::Mode::kOffsetFree;
    const auto free = sim::run_tracking(s).metrics;
    s.mpc.mode = mpc::Mode::kStandard;
    const auto standard = sim::run_tracking(s).metrics;
    const double free_max = rad2deg(free.max_offset());
    const double std_max = rad2deg(standard.max_offset());
    r.passed = free_max <= 0.1 && std_max >= 1.0 && std_max >= 3.0;
    r.detail = fmt::format(
        "offset-free {:.4f}/{:.4f} deg (limit 0.1), standard {:.3f}/{:.3f} deg (need >= 1, "
        "disturbance sized for >= 3)",
        rad2deg(free.offset_alpha), rad2deg(free.offset_beta), rad2deg(standard.offset_alpha),
        rad2deg(standard.offset_beta));
  });
}

CheckResult rmse_reduction(const AcceptanceOptions& opts) {
  return timed("RMSE reduction", [&opts](CheckResult& r) {
    std::vector<sim::RunMetrics> free_runs, std_runs;
    for (auto kind : {sim::ReferenceKind::kRamp, sim::ReferenceKind::kSoftStep,
                      sim::ReferenceKind::kSinusoid}) {
      for (int k = 0; k < opts.seeds_per_kind; ++k) {
        auto s = opts.base;
        s.reference.kind = kind;
        s.duration = opts.mix_duration;
        s.seed = opts.base.seed + static_cast<unsigned long long>(k);
        s.mpc.mode = mpc::Mode::kOffsetFree;
        free_runs.push_back(sim::run_tracking(s).metrics);
        s.mpc.mode = mpc::Mode::kStandard;
        std_runs.push_back(sim::run_tracking(s).metrics);
      }
    }
    const double f = rad2deg(averaged_rmse(free_runs));
    const double st = rad2deg(averaged_rmse(std_runs));
    const double ratio = f / st;
    r.passed = ratio <= 0.80;
    r.detail = fmt::format("averaged RMSE {:.3f} deg vs {:.3f} deg, ratio {:.3f} (limit 0.80, {} runs each)",
                           f, st, ratio, free_runs.size());
  });
}

CheckResult catch_rate(const AcceptanceOptions& opts) {
  return timed("catch rate", [&opts](CheckResult& r) {
    auto s = opts.base;
    s.reference.kind = sim::ReferenceKind::kBallCatch;
    s.mpc.mode = mpc::Mode::kOffsetFree;
    const auto free = sim::run_catch_batch(s, opts.throws);
    s.mpc.mode = mpc::Mode::kStandard;
    const auto standard = sim::run_catch_batch(s, opts.throws);
    const double miss_mm = 1e3 * free.mean_miss;
    r.passed = free.intercepting == opts.throws && free.success_rate() >= 0.90 &&
               standard.success_rate() <= 0.70 &&
               standard.success_rate() < free.success_rate() && miss_mm <= 15.0;
    r.detail = fmt::format(
        "offset-free {}/{} ({}), standard {}/{} ({}), mean miss {:.2f} mm (limit 15), "
        "{} of {} throws intercepting",
        free.caught, free.intercepting, percent(free.success_rate()), standard.caught,
        standard.intercepting, percent(standard.success_rate()), miss_mm, free.intercepting,
        free.attempted);
  });
}

CheckResult wind_gust(const AcceptanceOptions& opts) {
  return timed("wind gust", [&opts](CheckResult& r) {
    auto s = opts.base;
    s.reference.kind = sim::ReferenceKind::kBallCatch;
    s.mpc.mode = mpc::Mode::kOffsetFree;
    s.ball.wind = {opts.gust_magnitude, 0.0, std::numeric_limits<double>::infinity()};
    sim::CatchRun run;
    for (int i = 0; i < 16; ++i) {
      run = sim::run_catch(s, i);
      if (run.metrics.intercepting) break;
    }
    if (!run.metrics.intercepting) {
      r.detail = "no intercepting throw under the gust";
      return;
    }
    // Window means over 0.1 s smooth the measurement noise in the trace.
    std::vector<double> mean_x, mean_err;
    std::vector<int> counts;
    const double t_first = run.predictions.front().t;
    for (const auto& p : run.predictions) {
      if (!p.prediction.valid) continue;
      const auto w = static_cast<std::size_t>((p.t - t_first) / 0.1);
      if (w >= mean_x.size()) {
        mean_x.resize(w + 1, 0.0);
        mean_err.resize(w + 1, 0.0);
        counts.resize(w + 1, 0);
      }
      mean_x[w] += p.prediction.point.x();
      mean_err[w] += (p.prediction.point - run.true_intercept).norm();
      ++counts[w];
    }
    std::vector<double> xs, errs;
    for (std::size_t w = 0; w < counts.size(); ++w) {
      if (!counts[w]) continue;
      xs.push_back(mean_x[w] / counts[w]);
      errs.push_back(mean_err[w] / counts[w]);
    }
    bool x_rising = xs.size() >= 3, err_falling = errs.size() >= 3;
    for (std::size_t w = 1; w < xs.size(); ++w) {
      x_rising = x_rising && xs[w] > xs[w - 1];
      err_falling = err_falling && errs[w] <= errs[w - 1];
    }
    const double final_mm = 1e3 * run.metrics.final_prediction_error;
    r.passed = x_rising && err_falling && run.metrics.caught && final_mm <= 31.0;
    r.detail = fmt::format(
        "gust {:.2f} m/s^2: prediction x {} over {} windows, error {} ({:.0f} -> {:.1f} mm), "
        "final error {:.2f} mm (limit 31), {} with miss {:.2f} mm",
        opts.gust_magnitude, x_rising ? "rising" : "NOT rising", xs.size(),
        err_falling ? "falling" : "NOT falling", errs.empty() ? 0.0 : 1e3 * errs.front(),
        errs.empty() ? 0.0 : 1e3 * errs.back(), final_mm, run.metrics.caught ? "caught" : "missed",
        1e3 * run.metrics.miss_distance);
  });
}

CheckResult property_suite() {
  const auto t0 = Clock::now();
  const auto checks = property_checks();
  CheckResult r;
  r.name = "property suites";
  r.seconds = seconds_since(t0);
  int failed = 0;
  std::string failures;
  for (const auto& c : checks) {
    if (!c.passed) {
      ++failed;
      failures += fmt::format("; {}: {}", c.name, c.detail);
    }
  }
  r.passed = failed == 0 && r.seconds < 60.0;
  r.detail = fmt::format("{} of {} checks pass in {:.1f} s (limit 60 s){}",
                         checks.size() - static_cast<std::size_t>(failed), checks.size(),
                         r.seconds, failures);
  return r;
}

CheckResult throughput(const AcceptanceOptions& opts) {
  return timed("throughput", [&opts](CheckResult& r) {
    auto s = opts.base;
    s.reference.kind = sim::ReferenceKind::kSinusoid;
    s.mpc.mode = mpc::Mode::kOffsetFree;
    const auto run = sim::run_tracking(s);
    const auto& st = run.metrics.solver;
    r.passed = st.mean_solve_ms <= 40.0;
    r.detail = fmt::format(
        "mean solve {:.3f} ms, max {:.3f} ms at N = {}, Ts = {} s ({} target 20 ms, fails above "
        "40 ms), {:.2f} IPM iterations on average",
        st.mean_solve_ms, st.max_solve_ms, s.mpc.horizon, s.mpc.ts,
        st.mean_solve_ms < 20.0 ? "within" : "above", st.mean_iterations());
  });
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::vector<int>& only) {
  auto wanted = [&only](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  std::vector<CriterionResult> out;
  auto add = [&out](int id, CheckResult r, double budget) {
    if (r.seconds > budget) {
      r.passed = false;
      r.detail += fmt::format("; runtime {:.1f} s over the {:.0f} s budget", r.seconds, budget);
    }
    out.push_back({id, std::move(r)});
  };
  const double inf = std::numeric_limits<double>::infinity();
  if (wanted(1)) add(1, offset_elimination(opts), 30.0);
  if (wanted(2)) add(2, rmse_reduction(opts), 120.0);
  if (wanted(3)) add(3, catch_rate(opts), 600.0);
  if (wanted(4)) add(4, wind_gust(opts), inf);
  if (wanted(5)) add(5, property_suite(), 60.0);
  if (wanted(6)) add(6, throughput(opts), inf);
  return out;
}

std::string format_result(const CriterionResult& r) {
  return fmt::format("{} {} {:<20} {:7.2f} s  {}", r.check.passed ? "PASS" : "FAIL", r.id,
                     r.check.name, r.check.seconds, r.check.detail);
}

}  // namespace softarm::verify
