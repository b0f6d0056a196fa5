#include "softarm/mpc.hpp"

#include <chrono>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace softarm::mpc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Matrix6 axis_diag(const std::vector<double>& triple) {
  Matrix6 m = Matrix6::Zero();
  for (int i = 0; i < 3; ++i) {
    m(i, i) = triple[static_cast<std::size_t>(i)];
    m(i + 3, i + 3) = triple[static_cast<std::size_t>(i)];
  }
  return m;
}

std::vector<double> read_triple(const KeyValueConfig& cfg, const std::string& key,
                                const Matrix6& fallback) {
  const std::vector<double> def = {fallback(0, 0), fallback(1, 1), fallback(2, 2)};
  auto v = cfg.get_doubles(key, def);
  if (v.size() == 1) v = {v[0], v[0], v[0]};
  if (v.size() != 3) {
    throw ConfigError(fmt::format("key '{}' expects 1 or 3 values", key));
  }
  return v;
}

void check_psd(const MatrixXd& m, const char* name, bool strict) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument(fmt::format("weight {} is not symmetric", name));
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const double lo = es.eigenvalues().minCoeff();
  if (strict ? !(lo > 0.0) : lo < -1e-12) {
    throw std::invalid_argument(fmt::format(
        "weight {} is not positive {}definite", name, strict ? "" : "semi"));
  }
}

std::string triple_string(const Matrix6& m) {
  return fmt::format("{}, {}, {}", format_number(m(0, 0)), format_number(m(1, 1)),
                     format_number(m(2, 2)));
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::kOffsetFree ? "offset_free" : "standard";
}

Mode parse_mode(std::string_view text) {
  if (text == "offset_free") return Mode::kOffsetFree;
  if (text == "standard") return Mode::kStandard;
  throw std::invalid_argument(
      fmt::format("unknown controller mode '{}' (offset_free|standard)", text));
}

MpcConfig MpcConfig::defaults() {
  MpcConfig c;
  c.q = axis_diag({100.0, 1.0, 0.1});
  c.r = 0.1 * Matrix2::Identity();
  c.p = c.q;
  c.r_d = Matrix2::Identity();
  c.polytope = allocation::build_input_polytope(c.p_min, c.p_max, c.p_bar);
  return c;
}

MpcConfig MpcConfig::from_config(const KeyValueConfig& cfg) {
  MpcConfig c = defaults();
  c.horizon = static_cast<int>(cfg.get_int("mpc.horizon", c.horizon));
  c.ts = cfg.get_double("mpc.ts", c.ts);
  c.q = axis_diag(read_triple(cfg, "mpc.q", c.q));
  c.p = cfg.has("mpc.p") ? axis_diag(read_triple(cfg, "mpc.p", c.p)) : c.q;
  c.r = cfg.get_double("mpc.r", c.r(0, 0)) * Matrix2::Identity();
  c.r_d = cfg.get_double("mpc.r_d", c.r_d(0, 0)) * Matrix2::Identity();
  c.p_bar = cfg.get_double("mpc.p_bar", c.p_bar);
  c.p_min = cfg.get_double("mpc.p_min", c.p_min);
  c.p_max = cfg.get_double("mpc.p_max", c.p_max);
  c.constrained = cfg.get_bool("mpc.constrained", c.constrained);
  c.mode = parse_mode(cfg.get_string("mpc.mode", std::string(to_string(c.mode))));
  c.solver.primal_tolerance =
      cfg.get_double("mpc.primal_tolerance", c.solver.primal_tolerance);
  c.solver.dual_tolerance =
      cfg.get_double("mpc.dual_tolerance", c.solver.dual_tolerance);
  c.solver.max_iterations = static_cast<int>(
      cfg.get_int("mpc.max_iterations", c.solver.max_iterations));
  c.polytope = allocation::build_input_polytope(c.p_min, c.p_max, c.p_bar);
  c.validate();
  return c;
}

void MpcConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("mpc.horizon", std::to_string(horizon));
  cfg.set("mpc.ts", ts);
  cfg.set("mpc.q", triple_string(q));
  cfg.set("mpc.p", triple_string(p));
  cfg.set("mpc.r", r(0, 0));
  cfg.set("mpc.r_d", r_d(0, 0));
  cfg.set("mpc.p_bar", p_bar);
  cfg.set("mpc.p_min", p_min);
  cfg.set("mpc.p_max", p_max);
  cfg.set("mpc.constrained", constrained ? "true" : "false");
  cfg.set("mpc.mode", std::string(to_string(mode)));
  cfg.set("mpc.primal_tolerance", solver.primal_tolerance);
  cfg.set("mpc.dual_tolerance", solver.dual_tolerance);
  cfg.set("mpc.max_iterations", std::to_string(solver.max_iterations));
}

void MpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("MPC horizon must be >= 1");
  if (!(ts > 0.0)) throw std::invalid_argument("MPC sampling time must be positive");
  check_psd(q, "Q", false);
  check_psd(p, "P", false);
  check_psd(r_d, "R_d", false);
  check_psd(r, "R", true);
}

CondensedModel::CondensedModel(const dynamics::DiscreteModel& model,
                               const MpcConfig& cfg)
    : horizon_(cfg.horizon), q_(cfg.q), p_(cfg.p), r_(cfg.r), r_d_(cfg.r_d) {
  cfg.validate();
  const int n = kNumStates;
  const int m = kNumInputs;
  const int big_n = horizon_;

  phi_.resize(n * big_n, n);
  gamma_ = MatrixXd::Zero(n * big_n, m * big_n);
  psi_e_.resize(n * big_n, n);

  // Row block i holds x_{i+1}.
  Matrix6 a_pow = model.a;
  Matrix6 a_sum = Matrix6::Identity();  // I + A + ... + A^i
  for (int i = 0; i < big_n; ++i) {
    phi_.block(n * i, 0, n, n) = a_pow;
    psi_e_.block(n * i, 0, n, n) = a_sum * model.e;
    a_sum = model.a * a_sum + Matrix6::Identity();
    a_pow = model.a * a_pow;
  }
  // x_{i+1} depends on u_j through A^{i-j} B.
  Matrix62 a_pow_b = model.b;
  for (int k = 0; k < big_n; ++k) {
    for (int j = 0; j + k < big_n; ++j) {
      gamma_.block(n * (j + k), m * j, n, m) = a_pow_b;
    }
    a_pow_b = model.a * a_pow_b;
  }

  gamma_t_q_.resize(m * big_n, n * big_n);
  for (int i = 0; i < big_n; ++i) {
    const Matrix6& w = (i == big_n - 1) ? p_ : q_;
    gamma_t_q_.middleCols(n * i, n) = gamma_.middleRows(n * i, n).transpose() * w;
  }

  // D^T R_d D with (D U)_0 = u_0 and (D U)_i = u_i - u_{i-1}.
  MatrixXd rd = MatrixXd::Zero(m * big_n, m * big_n);
  for (int i = 0; i < big_n; ++i) {
    rd.block(m * i, m * i, m, m) += r_d_;
    if (i + 1 < big_n) {
      rd.block(m * i, m * i, m, m) += r_d_;
      rd.block(m * i, m * (i + 1), m, m) -= r_d_;
      rd.block(m * (i + 1), m * i, m, m) -= r_d_;
    }
  }
  MatrixXd r_stack = MatrixXd::Zero(m * big_n, m * big_n);
  for (int i = 0; i < big_n; ++i) r_stack.block(m * i, m * i, m, m) = r_;

  hessian_ = 2.0 * (gamma_t_q_ * gamma_ + r_stack + rd);
  hessian_ = 0.5 * (hessian_ + hessian_.transpose()).eval();

  if (cfg.constrained) {
    qp::InequalityBlock proto;
    proto.g.resize(static_cast<Eigen::Index>(cfg.polytope.faces.size()), m);
    proto.h.resize(proto.g.rows());
    for (std::size_t f = 0; f < cfg.polytope.faces.size(); ++f) {
      proto.g.row(static_cast<Eigen::Index>(f)) =
          cfg.polytope.faces[f].normal.transpose();
      proto.h(static_cast<Eigen::Index>(f)) = cfg.polytope.faces[f].offset;
    }
    for (int i = 0; i < big_n; ++i) {
      proto.col = m * i;
      blocks_.push_back(proto);
    }
  }
}

QpData CondensedModel::build(const ArmState& x_meas, const Input& u_prev,
                             const Disturbance& d_hat,
                             std::span<const tracking::TargetPair> targets) const {
  const int n = kNumStates;
  const int m = kNumInputs;
  const int big_n = horizon_;
  if (static_cast<int>(targets.size()) != big_n + 1) {
    throw std::invalid_argument(fmt::format(
        "expected {} targets, got {}", big_n + 1, targets.size()));
  }

  // f = Phi x0 + Psi E d - X_bar over x_1..x_N
  VectorXd f = phi_ * x_meas + psi_e_ * d_hat;
  for (int i = 0; i < big_n; ++i) {
    f.segment(n * i, n) -= targets[static_cast<std::size_t>(i + 1)].x_bar;
  }

  VectorXd g = 2.0 * (gamma_t_q_ * f);
  double constant = 0.0;
  for (int i = 0; i < big_n; ++i) {
    const Input& u_bar = targets[static_cast<std::size_t>(i)].u_bar;
    g.segment(m * i, m) -= 2.0 * (r_ * u_bar);
    constant += u_bar.dot(r_ * u_bar);
    const Matrix6& w = (i == big_n - 1) ? p_ : q_;
    const auto fi = f.segment(n * i, n);
    constant += fi.dot(w * fi);
  }
  g.segment(0, m) -= 2.0 * (r_d_ * u_prev);
  constant += u_prev.dot(r_d_ * u_prev);
  const ArmState e0 = x_meas - targets[0].x_bar;
  constant += e0.dot(q_ * e0);

  QpData data;
  data.problem.hessian = hessian_;
  data.problem.gradient = std::move(g);
  data.problem.blocks = blocks_;
  data.constant = constant;
  return data;
}

std::vector<ArmState> CondensedModel::predict(const ArmState& x0,
                                              const Disturbance& d_hat,
                                              const VectorXd& inputs) const {
  const VectorXd x = phi_ * x0 + gamma_ * inputs + psi_e_ * d_hat;
  std::vector<ArmState> out;
  out.reserve(static_cast<std::size_t>(horizon_ + 1));
  out.push_back(x0);
  for (int i = 0; i < horizon_; ++i) out.push_back(x.segment(kNumStates * i, kNumStates));
  return out;
}

QpData build_qp(const dynamics::DiscreteModel& model, const ArmState& x_meas,
                const Input& u_prev, const Disturbance& d_hat,
                std::span<const tracking::TargetPair> targets,
                const MpcConfig& cfg) {
  return CondensedModel(model, cfg).build(x_meas, u_prev, d_hat, targets);
}

qp::Solution solve_qp(const QpData& data, const qp::Settings& settings,
                      const qp::WarmStart* warm) {
  return qp::solve(data.problem, settings, warm);
}

MpcController::MpcController(const dynamics::DiscreteModel& model, MpcConfig cfg)
    : model_(model), cfg_(std::move(cfg)), condensed_(model_, cfg_),
      targets_(model_) {}

ControlOutput MpcController::step(const ArmState& x_meas, const Input& u_prev,
                                  const Disturbance& d_hat,
                                  std::span<const Setpoint> refs) {
  if (refs.empty()) throw std::invalid_argument("empty reference sequence");
  const int big_n = cfg_.horizon;
  const int m = kNumInputs;
  const Disturbance d_used =
      cfg_.mode == Mode::kOffsetFree ? d_hat : Disturbance::Zero();

  std::vector<Setpoint> padded(refs.begin(), refs.end());
  padded.resize(static_cast<std::size_t>(big_n + 1), refs.back());

  const auto start = std::chrono::steady_clock::now();
  MpcSolution out;
  out.targets = targets_.solve(std::span<const Setpoint>(padded), d_used);
  const QpData data = condensed_.build(x_meas, u_prev, d_used, out.targets);

  qp::Solution sol;
  if (warm_) {
    sol = solve_qp(data, cfg_.solver, &*warm_);
    out.warm_started = true;
  }
  if (!sol.converged()) {
    sol = solve_qp(data, cfg_.solver, nullptr);
    out.warm_started = false;
  }
  out.solve_time_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.primal_residual = sol.primal_residual;
  out.dual_residual = sol.dual_residual;
  out.gap = sol.gap;

  if (sol.converged()) {
    out.u0 = sol.x.head<kNumInputs>();
    out.cost = sol.objective + data.constant;
    out.predicted_states = condensed_.predict(x_meas, d_used, sol.x);
    for (int i = 0; i < big_n; ++i) out.predicted_inputs.push_back(sol.x.segment(m * i, m));

    // Shift by one step for the next call.
    qp::WarmStart next;
    next.x.resize(sol.x.size());
    next.x.head(m * (big_n - 1)) = sol.x.tail(m * (big_n - 1));
    next.x.tail(m) = sol.x.tail(m);
    const Eigen::Index rows = sol.slack.size();
    if (rows > 0) {
      const Eigen::Index per = rows / big_n;
      next.slack.resize(rows);
      next.lambda.resize(rows);
      next.slack.head(rows - per) = sol.slack.tail(rows - per);
      next.slack.tail(per) = sol.slack.tail(per);
      next.lambda.head(rows - per) = sol.lambda.tail(rows - per);
      next.lambda.tail(per) = sol.lambda.tail(per);
      // Re-center so the interior-point iteration does not start on the boundary.
      next.slack = next.slack.cwiseMax(1e-3);
      next.lambda = next.lambda.cwiseMax(1e-3);
    }
    warm_ = std::move(next);
  } else {
    ++failures_;
    out.fail_safe = true;
    out.u0 = u_prev;
    warm_.reset();
    spdlog::warn("MPC solve failed ({}), reusing previous input",
                 qp::to_string(sol.status));
  }

  ControlOutput result;
  result.pressures = allocation::xi_inv({out.u0(0), out.u0(1), cfg_.p_bar});
  result.solution = std::move(out);
  return result;
}

ControlOutput control_step(const dynamics::DiscreteModel& model,
                           const ArmState& x_meas, const Input& u_prev,
                           const Disturbance& d_hat,
                           std::span<const Setpoint> refs, const MpcConfig& cfg) {
  MpcController controller(model, cfg);
  return controller.step(x_meas, u_prev, d_hat, refs);
}

}  // namespace softarm::mpc
