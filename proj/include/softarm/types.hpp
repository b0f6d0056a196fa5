#pragma once

#include <Eigen/Core>

namespace softarm {

inline constexpr int kNumStates = 6;
inline constexpr int kNumInputs = 2;
inline constexpr int kNumAugmented = 2 * kNumStates;

/// (alpha, alpha_dot, dp_alpha, beta, beta_dot, dp_beta)
using ArmState = Eigen::Matrix<double, kNumStates, 1>;
/// (dp_alpha_sp, dp_beta_sp)
using Input = Eigen::Matrix<double, kNumInputs, 1>;
using Disturbance = Eigen::Matrix<double, kNumStates, 1>;

using Matrix6 = Eigen::Matrix<double, kNumStates, kNumStates>;
using Matrix62 = Eigen::Matrix<double, kNumStates, kNumInputs>;
using Matrix2 = Eigen::Matrix<double, kNumInputs, kNumInputs>;
using Matrix12 = Eigen::Matrix<double, kNumAugmented, kNumAugmented>;
using Vector12 = Eigen::Matrix<double, kNumAugmented, 1>;
using Vector3 = Eigen::Vector3d;
using Vector2 = Eigen::Vector2d;

// State vector layout.
namespace idx {
inline constexpr int kAlpha = 0;
inline constexpr int kAlphaDot = 1;
inline constexpr int kDpAlpha = 2;
inline constexpr int kBeta = 3;
inline constexpr int kBetaDot = 4;
inline constexpr int kDpBeta = 5;
}  // namespace idx

/// Desired arm orientation in radians.
struct Setpoint {
  double alpha = 0.0;
  double beta = 0.0;

  Vector2 vec() const { return {alpha, beta}; }
};

constexpr double deg2rad(double deg) { return deg * 0.017453292519943295; }
constexpr double rad2deg(double rad) { return rad * 57.29577951308232; }

}  // namespace softarm
