#include "softarm/tracking.hpp"

#include <spdlog/spdlog.h>

namespace softarm::tracking {

Eigen::Matrix<double, kNumInputs, kNumStates> selection_matrix() {
  Eigen::Matrix<double, kNumInputs, kNumStates> h;
  h.setZero();
  h(0, idx::kAlpha) = 1.0;
  h(1, idx::kBeta) = 1.0;
  return h;
}

TargetSolver::TargetSolver(const dynamics::DiscreteModel& model) : e_(model.e) {
  system_.setZero();
  system_.topLeftCorner<kNumStates, kNumStates>() =
      model.a - Matrix6::Identity();
  system_.topRightCorner<kNumStates, kNumInputs>() = model.b;
  system_.bottomLeftCorner<kNumInputs, kNumStates>() = selection_matrix();

  Eigen::JacobiSVD<Matrix8> svd(system_);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  condition_ = smallest > 0.0 ? sv(0) / smallest
                              : std::numeric_limits<double>::infinity();
  degraded_ = !(condition_ <= kConditionLimit);
  if (degraded_) {
    spdlog::warn("target system condition number {:.3e} above {:.0e}, "
                 "using minimum-norm solution", condition_, kConditionLimit);
    cod_.compute(system_);
  } else {
    lu_.compute(system_);
  }
}

TargetSolver::Vector8 TargetSolver::rhs(const Setpoint& r,
                                        const Disturbance& d_hat) const {
  Vector8 b;
  b.head<kNumStates>() = -e_ * d_hat;
  b.tail<kNumInputs>() = r.vec();
  return b;
}

TargetPair TargetSolver::solve(const Setpoint& r, const Disturbance& d_hat) const {
  const Vector8 b = rhs(r, d_hat);
  const Vector8 sol = degraded_ ? Vector8(cod_.solve(b)) : Vector8(lu_.solve(b));
  return {sol.head<kNumStates>(), sol.tail<kNumInputs>()};
}

std::vector<TargetPair> TargetSolver::solve(std::span<const Setpoint> refs,
                                            const Disturbance& d_hat) const {
  std::vector<TargetPair> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(solve(r, d_hat));
  return out;
}

double TargetSolver::residual(const TargetPair& t, const Setpoint& r,
                              const Disturbance& d_hat) const {
  Vector8 z;
  z << t.x_bar, t.u_bar;
  return (system_ * z - rhs(r, d_hat)).cwiseAbs().maxCoeff();
}

TargetPair compute_target(const Setpoint& r, const Disturbance& d_hat,
                          const dynamics::DiscreteModel& model) {
  return TargetSolver(model).solve(r, d_hat);
}

std::vector<TargetPair> compute_target_trajectory(
    std::span<const Setpoint> refs, const Disturbance& d_hat,
    const dynamics::DiscreteModel& model) {
  return TargetSolver(model).solve(refs, d_hat);
}

}  // namespace softarm::tracking
