#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "softarm/ball.hpp"
#include "softarm/dynamics.hpp"
#include "softarm/sim.hpp"
#include "softarm/tracking.hpp"
#include "softarm/types.hpp"

// Independent reference computations used by the tests and the acceptance
// suite. None of them call the code they check.
namespace softarm::verify {

/// Pressure-box membership: all three pressures from xi_inv(dp, p_bar) lie
/// in [p_min - tol, p_max + tol].
bool pressure_box_contains(const Vector2& dp, double p_min, double p_max, double p_bar,
                           double tol = 1e-9);

/// (A, B, E) by integrating x' = A_c x + B_c u + d with classical RK4 over
/// one period in `steps` steps, once per unit input / disturbance column.
dynamics::DiscreteModel rk4_discretize(const dynamics::ContinuousModel& model, double ts,
                                       int steps);

/// Positive root of p = a^2 p - a^2 c^2 p^2 / (c^2 p + r) + q by bisection.
double scalar_dare_bisection(double a, double c, double q, double r, double tol = 1e-14);

/// Residual of the equilibrium equations: max |(A - I) x + B u + E d| and
/// |H x - r| entries.
double target_residual(const dynamics::DiscreteModel& model, const tracking::TargetPair& t,
                       const Setpoint& r, const Disturbance& d);

/// First input of the finite-horizon LQ tracking problem
///   min sum_{i=1}^{N-1} |x_i - xr_i|_Q + |x_N - xr_N|_P + sum_{i=0}^{N-1} |u_i - ur_i|_R
///   s.t. x_{i+1} = A x_i + B u_i + E d
/// solved by the affine backward Riccati recursion.
Input lq_tracking_first_input(const dynamics::DiscreteModel& model, const Matrix6& q,
                              const Matrix2& r, const Matrix6& p, const ArmState& x0,
                              const Disturbance& d,
                              const std::vector<tracking::TargetPair>& targets);

/// Central finite-difference Jacobian.
Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h);

/// Fall time from rest through height `drop` without drag.
double free_fall_time(double drop);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Property checks grouped by the module they exercise.
std::vector<CheckResult> property_checks();

struct AcceptanceOptions {
  sim::Scenario base = sim::Scenario::defaults();
  int throws = 200;
  int seeds_per_kind = 3;
  double mix_duration = 20.0;
  double gust_magnitude = 1.0;  ///< documented +x gust [m/s^2]
};

struct CriterionResult {
  int id = 0;
  CheckResult check;
};

CheckResult offset_elimination(const AcceptanceOptions& opts);
CheckResult rmse_reduction(const AcceptanceOptions& opts);
CheckResult catch_rate(const AcceptanceOptions& opts);
CheckResult wind_gust(const AcceptanceOptions& opts);
CheckResult property_suite();
CheckResult throughput(const AcceptanceOptions& opts);

/// Runs the criteria in order; `only` selects a subset by id when nonempty.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::vector<int>& only = {});

/// One line per criterion: "PASS  3 catch rate  <detail>".
std::string format_result(const CriterionResult& r);

}  // namespace softarm::verify
