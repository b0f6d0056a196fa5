#include "softarm/estimation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace softarm::estimation {

NoiseConfig NoiseConfig::defaults() {
  NoiseConfig n;
  for (int i = 0; i < kNumStates; ++i) {
    n.q_proc(i, i) = 1e-6;
    n.q_proc(kNumStates + i, kNumStates + i) = 1e-4;
  }
  const double angle = 1e-3, rate = 1e-2, pressure = 1e-3;
  const double stds[kNumStates] = {angle, rate, pressure, angle, rate, pressure};
  for (int i = 0; i < kNumStates; ++i) n.r_meas(i, i) = stds[i] * stds[i];
  return n;
}

NoiseConfig NoiseConfig::from_config(const KeyValueConfig& cfg) {
  NoiseConfig n = defaults();
  const double q_state = cfg.get_double("kf.q_state", 1e-6);
  const double q_dist = cfg.get_double("kf.q_disturbance", 1e-4);
  const double angle = cfg.get_double("kf.r_angle_std", 1e-3);
  const double rate = cfg.get_double("kf.r_rate_std", 1e-2);
  const double pressure = cfg.get_double("kf.r_pressure_std", 1e-3);
  n.q_proc.setZero();
  n.r_meas.setZero();
  const double stds[kNumStates] = {angle, rate, pressure, angle, rate, pressure};
  for (int i = 0; i < kNumStates; ++i) {
    n.q_proc(i, i) = q_state;
    n.q_proc(kNumStates + i, kNumStates + i) = q_dist;
    n.r_meas(i, i) = stds[i] * stds[i];
  }
  n.validate();
  return n;
}

void NoiseConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("kf.q_state", q_proc(0, 0));
  cfg.set("kf.q_disturbance", q_proc(kNumStates, kNumStates));
  cfg.set("kf.r_angle_std", std::sqrt(r_meas(idx::kAlpha, idx::kAlpha)));
  cfg.set("kf.r_rate_std", std::sqrt(r_meas(idx::kAlphaDot, idx::kAlphaDot)));
  cfg.set("kf.r_pressure_std", std::sqrt(r_meas(idx::kDpAlpha, idx::kDpAlpha)));
}

void NoiseConfig::validate() const {
  if ((q_proc - q_proc.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (r_meas - r_meas.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw EstimationError("noise covariances must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix12> q_eig(q_proc);
  if (q_eig.eigenvalues().minCoeff() < -1e-12) {
    throw EstimationError("process covariance is not positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix6> r_eig(r_meas);
  if (r_eig.eigenvalues().minCoeff() <= 0.0) {
    throw EstimationError("measurement covariance is not positive definite");
  }
}

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double tol) {
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0 - tol) continue;
    Eigen::MatrixXcd pbh(n + c.rows(), n);
    pbh.topRows(n) = lambda * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>();
    pbh.bottomRows(c.rows()) = c.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= tol * std::max(1.0, sv(0))) return false;
  }
  return true;
}

DareSolution solve_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                        const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                        const DareOptions& options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || c.cols() != n || q.rows() != n || q.cols() != n ||
      r.rows() != c.rows() || r.cols() != c.rows()) {
    throw EstimationError("solve_dare: dimension mismatch");
  }
  if (!is_detectable(a, c)) {
    throw EstimationError("solve_dare: (A, C) is not detectable");
  }

  Eigen::MatrixXd p = q;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::MatrixXd s = c * p * c.transpose() + r;
    const Eigen::MatrixXd ap = a * p;
    const Eigen::MatrixXd gain_t = s.ldlt().solve(c * p * a.transpose());
    Eigen::MatrixXd next = ap * a.transpose() - ap * c.transpose() * gain_t + q;

    const double asym = (next - next.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    if (asym > options.symmetry_bound * scale) {
      throw EstimationError(
          fmt::format("solve_dare: covariance asymmetry {} at iteration {}", asym, it));
    }
    next = 0.5 * (next + next.transpose());

    const double change = (next - p).cwiseAbs().rowwise().sum().maxCoeff();
    p = std::move(next);
    if (change < options.tolerance) {
      DareSolution sol;
      const Eigen::MatrixXd s_final = c * p * c.transpose() + r;
      sol.k = s_final.ldlt().solve(c * p).transpose();
      sol.p = p;
      sol.iterations = it;
      return sol;
    }
  }
  throw EstimationError(fmt::format(
      "solve_dare: no convergence within {} iterations", options.max_iterations));
}

AugmentedModel build_augmented(const dynamics::DiscreteModel& model,
                               const NoiseConfig& noise,
                               const DareOptions& options) {
  noise.validate();
  AugmentedModel m;
  m.a_aug.setZero();
  m.a_aug.topLeftCorner<kNumStates, kNumStates>() = model.a;
  m.a_aug.topRightCorner<kNumStates, kNumStates>() = model.e;
  m.a_aug.bottomRightCorner<kNumStates, kNumStates>().setIdentity();
  m.b_aug.setZero();
  m.b_aug.topRows<kNumStates>() = model.b;
  m.c_aug.setZero();
  m.c_aug.leftCols<kNumStates>().setIdentity();

  const DareSolution sol = solve_dare(m.a_aug, m.c_aug, noise.q_proc,
                                      noise.r_meas, options);
  m.p_inf = sol.p;
  m.k_inf = sol.k;
  const Matrix12 i_kc = Matrix12::Identity() - m.k_inf * m.c_aug;
  m.a_hat = i_kc * m.a_aug;
  m.b_hat = i_kc * m.b_aug;
  if (spectral_radius(m.a_hat) >= 1.0) {
    throw EstimationError("steady-state filter recursion is not contractive");
  }
  return m;
}

DisturbanceEstimate kf_update(const DisturbanceEstimate& est,
                              const Input& u_prev, const ArmState& z,
                              const AugmentedModel& model) {
  Vector12 prior;
  prior << est.x_hat, est.d_hat;
  const Vector12 post = model.a_hat * prior + model.b_hat * u_prev + model.k_inf * z;
  return {post.head<kNumStates>(), post.tail<kNumStates>()};
}

DisturbanceObserver::DisturbanceObserver(AugmentedModel model,
                                         double d_saturation)
    : model_(std::move(model)), d_saturation_(d_saturation) {}

const DisturbanceEstimate& DisturbanceObserver::update(const Input& u_prev,
                                                       const ArmState& z) {
  estimate_ = kf_update(estimate_, u_prev, z, model_);
  estimate_.d_hat = estimate_.d_hat.cwiseMax(-d_saturation_).cwiseMin(d_saturation_);
  return estimate_;
}

void DisturbanceObserver::reset(const ArmState& x0) {
  estimate_.x_hat = x0;
  estimate_.d_hat.setZero();
}

}  // namespace softarm::estimation
