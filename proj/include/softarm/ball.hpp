#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "softarm/config.hpp"
#include "softarm/types.hpp"

namespace softarm::ball {

inline constexpr int kBallStates = 7;
inline constexpr double kGravity = 9.81;
/// EKF and prediction step [s].
inline constexpr double kDefaultStep = 0.005;

/// (position, velocity, drag coefficient K_D)
using BallVector = Eigen::Matrix<double, kBallStates, 1>;
using BallMatrix = Eigen::Matrix<double, kBallStates, kBallStates>;

struct BallState {
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  double k_d = 0.0;

  BallVector vec() const;
  static BallState from_vec(const BallVector& v);
};

class BallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// r'' = g - K_D |r'| r' + extra_accel; K_D' = 0.
BallVector ball_dynamics(const BallVector& x,
                         const Vector3& extra_accel = Vector3::Zero());

/// Analytic Jacobian of `ball_dynamics` (without external acceleration).
BallMatrix ball_jacobian(const BallVector& x);

BallVector rk4_step(const BallVector& x, double h,
                    const Vector3& extra_accel = Vector3::Zero());

/// Exact Jacobian of the RK4 map, composed through the four stages.
BallMatrix rk4_jacobian(const BallVector& x, double h);

struct EkfConfig {
  double step = kDefaultStep;
  double q_position = 1e-6;
  double q_velocity = 1e-3;
  double q_drag = 1e-5;
  double r_position = 1e-6;  ///< measurement variance [m^2]
  double init_position_var = 1e-6;
  double init_velocity_var = 1.0;
  double init_drag_var = 1e-3;
  double drag_prior = 0.02;

  static EkfConfig from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

/// Extended Kalman filter over BallState with position measurements.
class BallEkf {
 public:
  explicit BallEkf(EkfConfig cfg = {});

  void initialize(const BallState& x0, const BallMatrix& p0);
  /// Initialization from the configured priors.
  void initialize(const Vector3& position, const Vector3& velocity);

  /// RK4 predict over one step followed by the position update. K_D is
  /// clamped to be nonnegative afterwards.
  void step(const Vector3& z);

  bool initialized() const { return initialized_; }
  BallState state() const { return BallState::from_vec(x_); }
  const BallMatrix& covariance() const { return p_; }
  const EkfConfig& config() const { return cfg_; }

 private:
  EkfConfig cfg_;
  BallVector x_ = BallVector::Zero();
  BallMatrix p_ = BallMatrix::Zero();
  bool initialized_ = false;
  int asymmetry_strikes_ = 0;
};

struct InterceptPrediction {
  double alpha = 0.0;
  double beta = 0.0;
  double time_to_intercept = 0.0;
  Vector3 point = Vector3::Zero();
  bool valid = false;
};

/// Forward-integrates the mean until it first enters the sphere from outside
/// and converts the contact point to chart angles. `valid` is false without a
/// crossing inside `max_horizon` or when the contact is outside the chart.
InterceptPrediction predict_intercept(const BallState& est, const Vector3& center,
                                      double radius, double max_horizon,
                                      double step = kDefaultStep,
                                      const Vector3& extra_accel = Vector3::Zero());

/// Declares a throw once the ball is above `min_height` and its measured
/// speed exceeds `min_speed` for `frames` consecutive frames.
class ThrowDetector {
 public:
  ThrowDetector(double min_height = 0.0, double min_speed = 1.0, int frames = 3,
                double dt = kDefaultStep);

  /// Returns true on the frame the detection fires (and stays true after).
  bool update(const Vector3& z);
  bool detected() const { return detected_; }
  /// Velocity estimate from the last two frames.
  Vector3 velocity() const { return velocity_; }

 private:
  double min_height_;
  double min_speed_;
  int frames_;
  double dt_;
  std::optional<Vector3> last_;
  Vector3 velocity_ = Vector3::Zero();
  int streak_ = 0;
  bool detected_ = false;
};

/// Latest-value handoff between the ball estimator and the controller: the
/// writer publishes an immutable record, readers take a snapshot pointer.
template <typename T>
class Snapshot {
 public:
  void publish(T value) {
    auto next = std::make_shared<const T>(std::move(value));
    std::lock_guard lock(mutex_);
    current_.swap(next);
  }
  std::shared_ptr<const T> latest() const {
    std::lock_guard lock(mutex_);
    return current_;
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const T> current_;
};

}  // namespace softarm::ball
