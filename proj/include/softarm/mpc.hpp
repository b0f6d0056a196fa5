#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "softarm/allocation.hpp"
#include "softarm/config.hpp"
#include "softarm/dynamics.hpp"
#include "softarm/qp.hpp"
#include "softarm/tracking.hpp"
#include "softarm/types.hpp"

namespace softarm::mpc {

enum class Mode { kOffsetFree, kStandard };

std::string_view to_string(Mode mode);
/// Accepts "offset_free" and "standard"; throws std::invalid_argument otherwise.
Mode parse_mode(std::string_view text);

struct MpcConfig {
  int horizon = 50;
  double ts = 0.02;
  Matrix6 q = Matrix6::Zero();
  Matrix2 r = Matrix2::Zero();
  Matrix6 p = Matrix6::Zero();
  Matrix2 r_d = Matrix2::Zero();
  allocation::InputPolytope polytope;
  double p_bar = allocation::kDefaultPBar;
  double p_min = allocation::kDefaultPMin;
  double p_max = allocation::kDefaultPMax;
  bool constrained = true;
  Mode mode = Mode::kOffsetFree;
  qp::Settings solver;

  /// Q = diag(100, 1, 0.1) per axis, R = 0.1 I, P = Q, R_d = I, pressure box
  /// [1.0, 1.9] bar at p_bar = 1.05 bar, N = 50, Ts = 0.02 s.
  static MpcConfig defaults();
  /// Reads `mpc.*` keys over the defaults. Weight keys are per-axis diagonal
  /// triples (`mpc.q = 100, 1, 0.1`) or scalars (`mpc.r = 0.1`).
  static MpcConfig from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
  /// Throws std::invalid_argument on a bad horizon or weight definiteness.
  void validate() const;
};

/// Condensed QP over the stacked inputs (u_0 .. u_{N-1}) plus the constant
/// part of the cost, so `problem.objective(U) + constant` is the full cost.
struct QpData {
  qp::Problem problem;
  double constant = 0.0;
};

/// Prediction matrices that depend only on the model and weights.
class CondensedModel {
 public:
  CondensedModel(const dynamics::DiscreteModel& model, const MpcConfig& cfg);

  QpData build(const ArmState& x_meas, const Input& u_prev,
               const Disturbance& d_hat,
               std::span<const tracking::TargetPair> targets) const;

  /// Predicted states x_0 .. x_N for a stacked input sequence.
  std::vector<ArmState> predict(const ArmState& x0, const Disturbance& d_hat,
                                const Eigen::VectorXd& inputs) const;

  int horizon() const { return horizon_; }
  const Eigen::MatrixXd& hessian() const { return hessian_; }

 private:
  int horizon_;
  Matrix6 q_;
  Matrix6 p_;
  Matrix2 r_;
  Matrix2 r_d_;
  Eigen::MatrixXd phi_;        // 6N x 6
  Eigen::MatrixXd gamma_;      // 6N x 2N
  Eigen::MatrixXd psi_e_;      // 6N x 6
  Eigen::MatrixXd gamma_t_q_;  // 2N x 6N, Gamma^T blkdiag(Q, .., Q, P)
  Eigen::MatrixXd hessian_;
  std::vector<qp::InequalityBlock> blocks_;
};

/// Assembles the condensed QP; throws std::invalid_argument when the target
/// sequence is not N+1 long.
QpData build_qp(const dynamics::DiscreteModel& model, const ArmState& x_meas,
                const Input& u_prev, const Disturbance& d_hat,
                std::span<const tracking::TargetPair> targets,
                const MpcConfig& cfg);

struct MpcSolution {
  Input u0 = Input::Zero();
  std::vector<ArmState> predicted_states;
  std::vector<Input> predicted_inputs;
  std::vector<tracking::TargetPair> targets;
  qp::Status status = qp::Status::kNumericalFailure;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double cost = 0.0;
  double solve_time_ms = 0.0;
  bool warm_started = false;
  bool fail_safe = false;  ///< previous input reused after a solver failure
};

/// Solves the condensed QP; the warm start is the previous solution shifted
/// by one step.
qp::Solution solve_qp(const QpData& data, const qp::Settings& settings,
                      const qp::WarmStart* warm = nullptr);

struct ControlOutput {
  allocation::ActuatorPressures pressures;
  MpcSolution solution;
};

/// Receding-horizon controller: target trajectory, condensed QP, solve,
/// inverse allocation of the first input.
class MpcController {
 public:
  MpcController(const dynamics::DiscreteModel& model, MpcConfig cfg);

  /// `refs` holds N+1 setpoints (shorter sequences repeat their last entry).
  ControlOutput step(const ArmState& x_meas, const Input& u_prev,
                     const Disturbance& d_hat, std::span<const Setpoint> refs);

  void reset_warm_start() { warm_.reset(); }
  const MpcConfig& config() const { return cfg_; }
  const CondensedModel& condensed() const { return condensed_; }
  const tracking::TargetSolver& targets() const { return targets_; }
  int failures() const { return failures_; }

 private:
  dynamics::DiscreteModel model_;
  MpcConfig cfg_;
  CondensedModel condensed_;
  tracking::TargetSolver targets_;
  std::optional<qp::WarmStart> warm_;
  int failures_ = 0;
};

/// One-shot control step (builds a controller internally).
ControlOutput control_step(const dynamics::DiscreteModel& model,
                           const ArmState& x_meas, const Input& u_prev,
                           const Disturbance& d_hat,
                           std::span<const Setpoint> refs, const MpcConfig& cfg);

}  // namespace softarm::mpc
