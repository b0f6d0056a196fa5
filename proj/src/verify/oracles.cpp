#include <algorithm>
#include <cmath>

#include "softarm/allocation.hpp"
#include "softarm/verify.hpp"

namespace softarm::verify {

bool pressure_box_contains(const Vector2& dp, double p_min, double p_max, double p_bar,
                           double tol) {
  const auto p = allocation::xi_inv({dp.x(), dp.y(), p_bar});
  for (double v : {p.p_a, p.p_b, p.p_c}) {
    if (v < p_min - tol || v > p_max + tol) return false;
  }
  return true;
}

dynamics::DiscreteModel rk4_discretize(const dynamics::ContinuousModel& model, double ts,
                                       int steps) {
  const double h = ts / steps;
  auto integrate = [&](ArmState x, const ArmState& forcing) {
    auto f = [&](const ArmState& s) -> ArmState { return model.a_c * s + forcing; };
    for (int i = 0; i < steps; ++i) {
      const ArmState k1 = f(x);
      const ArmState k2 = f(x + 0.5 * h * k1);
      const ArmState k3 = f(x + 0.5 * h * k2);
      const ArmState k4 = f(x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
  };
  dynamics::DiscreteModel out;
  out.ts = ts;
  for (int j = 0; j < kNumStates; ++j) {
    out.a.col(j) = integrate(ArmState::Unit(j), ArmState::Zero());
    out.e.col(j) = integrate(ArmState::Zero(), ArmState::Unit(j));
  }
  for (int j = 0; j < kNumInputs; ++j) {
    out.b.col(j) = integrate(ArmState::Zero(), model.b_c.col(j));
  }
  return out;
}

double scalar_dare_bisection(double a, double c, double q, double r, double tol) {
  // g(p) = a^2 p r / (c^2 p + r) + q - p is positive at 0 and negative for
  // large p; the stabilizing root is the unique positive one.
  auto g = [&](double p) { return a * a * p * r / (c * c * p + r) + q - p; };
  double lo = 0.0, hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double target_residual(const dynamics::DiscreteModel& model, const tracking::TargetPair& t,
                       const Setpoint& r, const Disturbance& d) {
  const ArmState eq = (model.a - Matrix6::Identity()) * t.x_bar + model.b * t.u_bar + model.e * d;
  const double ra = std::abs(t.x_bar(idx::kAlpha) - r.alpha);
  const double rb = std::abs(t.x_bar(idx::kBeta) - r.beta);
  return std::max({eq.cwiseAbs().maxCoeff(), ra, rb});
}

Input lq_tracking_first_input(const dynamics::DiscreteModel& model, const Matrix6& q,
                              const Matrix2& r, const Matrix6& p, const ArmState& x0,
                              const Disturbance& d,
                              const std::vector<tracking::TargetPair>& targets) {
  const int n = static_cast<int>(targets.size()) - 1;
  const Matrix6& a = model.a;
  const Matrix62& b = model.b;
  const ArmState w = model.e * d;
  // Value function V_i(x) = x' S x + 2 s' x + const.
  Matrix6 s_mat = p;
  ArmState s_vec = -p * targets[static_cast<std::size_t>(n)].x_bar;
  Eigen::Matrix<double, kNumInputs, kNumStates> gain;
  Input offset;
  for (int i = n - 1; i >= 0; --i) {
    const Input& ur = targets[static_cast<std::size_t>(i)].u_bar;
    const Matrix2 m = r + b.transpose() * s_mat * b;
    const auto solver = m.ldlt();
    gain = solver.solve(b.transpose() * s_mat * a);
    offset = solver.solve(b.transpose() * s_mat * w + b.transpose() * s_vec - r * ur);
    const Matrix6 closed = a - b * gain;
    const ArmState drift = w - b * offset;
    const Matrix6 qi = q;
    const ArmState& xr = targets[static_cast<std::size_t>(i)].x_bar;
    const Matrix6 s_next = gain.transpose() * r * gain + closed.transpose() * s_mat * closed + qi;
    const ArmState s_vec_next = gain.transpose() * r * (offset + ur) +
                                closed.transpose() * (s_mat * drift + s_vec) - qi * xr;
    s_mat = 0.5 * (s_next + s_next.transpose());
    s_vec = s_vec_next;
  }
  return -gain * x0 - offset;
}

Eigen::MatrixXd central_difference(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

double free_fall_time(double drop) { return std::sqrt(2.0 * drop / ball::kGravity); }

}  // namespace softarm::verify
