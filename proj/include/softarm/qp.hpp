#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace softarm::qp {

/// Rows `g * x.segment(col, g.cols()) <= h`.
struct InequalityBlock {
  Eigen::Index col = 0;
  Eigen::MatrixXd g;
  Eigen::VectorXd h;
};

/// minimize 1/2 x^T H x + g^T x subject to block-diagonal inequalities.
/// H must be symmetric positive definite.
struct Problem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  std::vector<InequalityBlock> blocks;

  Eigen::Index num_variables() const { return gradient.size(); }
  Eigen::Index num_constraints() const;
  double objective(const Eigen::VectorXd& x) const;
  /// Stacked g x - h for every row.
  Eigen::VectorXd constraint_values(const Eigen::VectorXd& x) const;
};

struct Settings {
  double primal_tolerance = 1e-6;
  double dual_tolerance = 1e-6;
  double gap_tolerance = 1e-8;
  int max_iterations = 60;
  double step_fraction = 0.99;
};

enum class Status { kSolved, kMaxIterations, kNumericalFailure };

std::string_view to_string(Status status);

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd slack;   ///< optional, same length as the constraint rows
  Eigen::VectorXd lambda;  ///< optional
};

struct Solution {
  Eigen::VectorXd x;
  Eigen::VectorXd slack;
  Eigen::VectorXd lambda;
  Status status = Status::kNumericalFailure;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double objective = 0.0;
  /// Complementarity measure after each iteration, starting with the initial
  /// point. Non-increasing by construction.
  std::vector<double> gap_history;
  std::vector<double> residual_history;

  bool converged() const { return status == Status::kSolved; }
};

/// Primal-dual interior-point method with Mehrotra predictor-corrector steps.
/// Step lengths are shortened whenever the complementarity measure would
/// grow, so primal/dual residuals and the gap never increase (up to rounding
/// once they are far below tolerance).
Solution solve(const Problem& problem, const Settings& settings = {},
               const WarmStart* warm = nullptr);

}  // namespace softarm::qp
