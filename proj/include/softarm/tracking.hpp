#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "softarm/dynamics.hpp"
#include "softarm/types.hpp"

namespace softarm::tracking {

/// Steady-state pair holding a setpoint under a given disturbance.
struct TargetPair {
  ArmState x_bar = ArmState::Zero();
  Input u_bar = Input::Zero();
};

/// Selects alpha and beta from the state.
Eigen::Matrix<double, kNumInputs, kNumStates> selection_matrix();

/// Factors [[A - I, B], [H, 0]] once and solves it for any number of
/// (setpoint, disturbance) right-hand sides. Falls back to the minimum-norm
/// least-squares solution when the matrix is numerically singular.
class TargetSolver {
 public:
  static constexpr double kConditionLimit = 1e12;

  explicit TargetSolver(const dynamics::DiscreteModel& model);

  TargetPair solve(const Setpoint& r, const Disturbance& d_hat) const;
  std::vector<TargetPair> solve(std::span<const Setpoint> refs,
                                const Disturbance& d_hat) const;

  /// Residual of the defining linear system for a candidate pair.
  double residual(const TargetPair& t, const Setpoint& r,
                  const Disturbance& d_hat) const;

  double condition_number() const { return condition_; }
  bool degraded() const { return degraded_; }

 private:
  using Matrix8 = Eigen::Matrix<double, kNumStates + kNumInputs,
                                kNumStates + kNumInputs>;
  using Vector8 = Eigen::Matrix<double, kNumStates + kNumInputs, 1>;

  Vector8 rhs(const Setpoint& r, const Disturbance& d_hat) const;

  Matrix6 e_;
  Matrix8 system_;
  Eigen::PartialPivLU<Matrix8> lu_;
  Eigen::CompleteOrthogonalDecomposition<Matrix8> cod_;
  double condition_ = 0.0;
  bool degraded_ = false;
};

TargetPair compute_target(const Setpoint& r, const Disturbance& d_hat,
                          const dynamics::DiscreteModel& model);

std::vector<TargetPair> compute_target_trajectory(
    std::span<const Setpoint> refs, const Disturbance& d_hat,
    const dynamics::DiscreteModel& model);

}  // namespace softarm::tracking
