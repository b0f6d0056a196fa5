#include "softarm/ball.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "softarm/sphere.hpp"

namespace softarm::ball {

namespace {

const Vector3 kGravityVec(0.0, 0.0, -kGravity);

}  // namespace

BallVector BallState::vec() const {
  BallVector v;
  v << position, velocity, k_d;
  return v;
}

BallState BallState::from_vec(const BallVector& v) {
  return {v.head<3>(), v.segment<3>(3), v(6)};
}

BallVector ball_dynamics(const BallVector& x, const Vector3& extra_accel) {
  const Vector3 v = x.segment<3>(3);
  BallVector dx;
  dx.head<3>() = v;
  dx.segment<3>(3) = kGravityVec - x(6) * v.norm() * v + extra_accel;
  dx(6) = 0.0;
  return dx;
}

BallMatrix ball_jacobian(const BallVector& x) {
  const Vector3 v = x.segment<3>(3);
  const double speed = v.norm();
  BallMatrix j = BallMatrix::Zero();
  j.block<3, 3>(0, 3).setIdentity();
  if (speed > 0.0) {
    j.block<3, 3>(3, 3) =
        -x(6) * (speed * Eigen::Matrix3d::Identity() + v * v.transpose() / speed);
  }
  j.block<3, 1>(3, 6) = -speed * v;
  return j;
}

BallVector rk4_step(const BallVector& x, double h, const Vector3& extra_accel) {
  const BallVector k1 = ball_dynamics(x, extra_accel);
  const BallVector k2 = ball_dynamics(x + 0.5 * h * k1, extra_accel);
  const BallVector k3 = ball_dynamics(x + 0.5 * h * k2, extra_accel);
  const BallVector k4 = ball_dynamics(x + h * k3, extra_accel);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

BallMatrix rk4_jacobian(const BallVector& x, double h) {
  const BallMatrix eye = BallMatrix::Identity();
  const BallVector k1 = ball_dynamics(x);
  const BallMatrix j1 = ball_jacobian(x);
  const BallVector x2 = x + 0.5 * h * k1;
  const BallVector k2 = ball_dynamics(x2);
  const BallMatrix j2 = ball_jacobian(x2) * (eye + 0.5 * h * j1);
  const BallVector x3 = x + 0.5 * h * k2;
  const BallVector k3 = ball_dynamics(x3);
  const BallMatrix j3 = ball_jacobian(x3) * (eye + 0.5 * h * j2);
  const BallVector x4 = x + h * k3;
  const BallMatrix j4 = ball_jacobian(x4) * (eye + h * j3);
  return eye + h / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
}

EkfConfig EkfConfig::from_config(const KeyValueConfig& cfg) {
  EkfConfig c;
  c.q_position = cfg.get_double("ekf.q_position", c.q_position);
  c.q_velocity = cfg.get_double("ekf.q_velocity", c.q_velocity);
  c.q_drag = cfg.get_double("ekf.q_drag", c.q_drag);
  c.r_position = cfg.get_double("ekf.r_position", c.r_position);
  c.init_position_var = cfg.get_double("ekf.init_position_var", c.init_position_var);
  c.init_velocity_var = cfg.get_double("ekf.init_velocity_var", c.init_velocity_var);
  c.init_drag_var = cfg.get_double("ekf.init_drag_var", c.init_drag_var);
  c.drag_prior = cfg.get_double("ekf.drag_prior", c.drag_prior);
  return c;
}

void EkfConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("ekf.q_position", q_position);
  cfg.set("ekf.q_velocity", q_velocity);
  cfg.set("ekf.q_drag", q_drag);
  cfg.set("ekf.r_position", r_position);
  cfg.set("ekf.init_position_var", init_position_var);
  cfg.set("ekf.init_velocity_var", init_velocity_var);
  cfg.set("ekf.init_drag_var", init_drag_var);
  cfg.set("ekf.drag_prior", drag_prior);
}

BallEkf::BallEkf(EkfConfig cfg) : cfg_(cfg) {}

void BallEkf::initialize(const BallState& x0, const BallMatrix& p0) {
  x_ = x0.vec();
  p_ = 0.5 * (p0 + p0.transpose());
  initialized_ = true;
  asymmetry_strikes_ = 0;
}

void BallEkf::initialize(const Vector3& position, const Vector3& velocity) {
  BallMatrix p0 = BallMatrix::Zero();
  p0.diagonal() << Vector3::Constant(cfg_.init_position_var),
      Vector3::Constant(cfg_.init_velocity_var), cfg_.init_drag_var;
  initialize({position, velocity, cfg_.drag_prior}, p0);
}

void BallEkf::step(const Vector3& z) {
  if (!initialized_) throw BallError("ball EKF stepped before initialization");
  if (!z.allFinite()) throw BallError("non-finite ball measurement");

  const BallMatrix phi = rk4_jacobian(x_, cfg_.step);
  x_ = rk4_step(x_, cfg_.step);
  BallMatrix q = BallMatrix::Zero();
  q.diagonal() << Vector3::Constant(cfg_.q_position),
      Vector3::Constant(cfg_.q_velocity), cfg_.q_drag;
  const BallMatrix p_prior = phi * p_ * phi.transpose() + q;

  const Eigen::Matrix3d s =
      p_prior.topLeftCorner<3, 3>() + cfg_.r_position * Eigen::Matrix3d::Identity();
  const Eigen::Matrix<double, kBallStates, 3> gain =
      s.ldlt().solve(p_prior.topRows<3>()).transpose();
  x_ += gain * (z - x_.head<3>());

  // Joseph form keeps the update positive semidefinite.
  BallMatrix i_kh = BallMatrix::Identity();
  i_kh.leftCols<3>() -= gain;
  BallMatrix p = i_kh * p_prior * i_kh.transpose() +
                 cfg_.r_position * gain * gain.transpose();

  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) {
    if (++asymmetry_strikes_ > 1) {
      throw BallError("ball EKF covariance lost symmetry twice in a row");
    }
  } else {
    asymmetry_strikes_ = 0;
  }
  p_ = 0.5 * (p + p.transpose());
  x_(6) = std::max(x_(6), 0.0);
}

InterceptPrediction predict_intercept(const BallState& est, const Vector3& center,
                                      double radius, double max_horizon,
                                      double step, const Vector3& extra_accel) {
  InterceptPrediction out;
  BallVector x = est.vec();
  auto distance = [&](const BallVector& s) {
    return (s.head<3>() - center).norm() - radius;
  };
  if (!(distance(x) > 0.0)) return out;

  double t = 0.0;
  while (t < max_horizon) {
    const BallVector next = rk4_step(x, step, extra_accel);
    if (distance(next) <= 0.0) {
      double lo = 0.0, hi = step;
      BallVector contact = next;
      for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        const BallVector probe = rk4_step(x, mid, extra_accel);
        const double dist = distance(probe);
        if (dist > 0.0) {
          lo = mid;
        } else {
          hi = mid;
          contact = probe;
        }
        if (std::abs(dist) < 1e-11) {
          contact = probe;
          hi = mid;
          break;
        }
      }
      out.point = contact.head<3>();
      out.time_to_intercept = t + hi;
      const Vector3 dir = out.point - center;
      if (dir.z() <= 0.0) return out;
      const Setpoint angles = sphere::angles(dir);
      out.alpha = angles.alpha;
      out.beta = angles.beta;
      out.valid = sphere::in_chart(angles);
      return out;
    }
    x = next;
    t += step;
  }
  return out;
}

ThrowDetector::ThrowDetector(double min_height, double min_speed, int frames,
                             double dt)
    : min_height_(min_height), min_speed_(min_speed), frames_(frames), dt_(dt) {}

bool ThrowDetector::update(const Vector3& z) {
  if (last_) {
    velocity_ = (z - *last_) / dt_;
    if (z.z() > min_height_ && velocity_.norm() > min_speed_) {
      ++streak_;
    } else {
      streak_ = 0;
    }
    if (streak_ >= frames_) detected_ = true;
  }
  last_ = z;
  return detected_;
}

}  // namespace softarm::ball
