#pragma once

#include <stdexcept>

#include <Eigen/Core>

#include "softarm/config.hpp"
#include "softarm/dynamics.hpp"
#include "softarm/types.hpp"

namespace softarm::estimation {

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NoiseConfig {
  Matrix12 q_proc = Matrix12::Zero();
  Matrix6 r_meas = Matrix6::Zero();

  /// Sensor-noise based defaults: angle 1e-3 rad, rate 1e-2 rad/s,
  /// pressure 1e-3 bar; process 1e-6 on arm states, 1e-4 on disturbances.
  static NoiseConfig defaults();
  static NoiseConfig from_config(const KeyValueConfig& cfg);
  /// Writes the diagonal back as `kf.*` keys (alpha-axis entries).
  void to_config(KeyValueConfig& cfg) const;
  /// Throws EstimationError on asymmetry or indefiniteness.
  void validate() const;
};

struct DareOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  double symmetry_bound = 1e-8;
};

struct DareSolution {
  Eigen::MatrixXd p;  ///< steady-state a priori covariance
  Eigen::MatrixXd k;  ///< filter gain P C^T (C P C^T + R)^-1
  int iterations = 0;
};

/// Iterates the Riccati recursion P <- A P A^T - A P C^T (C P C^T + R)^-1 C P A^T + Q
/// to a fixed point. Throws EstimationError when the pair is not detectable,
/// the iteration does not converge, or the iterate loses symmetry.
DareSolution solve_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                        const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                        const DareOptions& options = {});

/// PBH test on every eigenvalue of `a` with modulus >= 1.
bool is_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double tol = 1e-9);

double spectral_radius(const Eigen::MatrixXd& m);

/// Disturbance-augmented model with its steady-state filter.
struct AugmentedModel {
  Matrix12 a_aug;
  Eigen::Matrix<double, kNumAugmented, kNumInputs> b_aug;
  Eigen::Matrix<double, kNumStates, kNumAugmented> c_aug;
  Eigen::Matrix<double, kNumAugmented, kNumStates> k_inf;
  Matrix12 p_inf;
  /// (I - K C) A_aug and (I - K C) B_aug
  Matrix12 a_hat;
  Eigen::Matrix<double, kNumAugmented, kNumInputs> b_hat;
};

AugmentedModel build_augmented(const dynamics::DiscreteModel& model,
                               const NoiseConfig& noise,
                               const DareOptions& options = {});

struct DisturbanceEstimate {
  ArmState x_hat = ArmState::Zero();
  Disturbance d_hat = Disturbance::Zero();
};

/// One recursion of the steady-state filter:
/// [x;d](k) = A_hat [x;d](k-1) + B_hat u(k-1) + K z(k).
DisturbanceEstimate kf_update(const DisturbanceEstimate& est,
                              const Input& u_prev, const ArmState& z,
                              const AugmentedModel& model);

/// Stateful wrapper that also clamps the disturbance estimate.
class DisturbanceObserver {
 public:
  DisturbanceObserver(AugmentedModel model, double d_saturation = 1e3);

  const DisturbanceEstimate& update(const Input& u_prev, const ArmState& z);
  void reset(const ArmState& x0);

  const DisturbanceEstimate& estimate() const { return estimate_; }
  const AugmentedModel& model() const { return model_; }

 private:
  AugmentedModel model_;
  double d_saturation_;
  DisturbanceEstimate estimate_;
};

}  // namespace softarm::estimation
