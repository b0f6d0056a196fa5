#include "softarm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "softarm/kernels/kernels.hpp"

namespace softarm::qp {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

struct Residuals {
  VectorXd dual;    // H x + g + G^T lambda
  VectorXd primal;  // G x + s - h
  double mu = 0.0;
};

class Workspace {
 public:
  explicit Workspace(const Problem& p)
      : p_(p), n_(p.num_variables()), m_(p.num_constraints()),
        factor_(static_cast<std::size_t>(n_ * n_)) {}

  Index n() const { return n_; }
  Index m() const { return m_; }

  VectorXd hess_times(const VectorXd& x) const {
    VectorXd y(n_);
    // H is symmetric, so its column-major storage reads as row-major.
    kernels::gemv({p_.hessian.data(), static_cast<std::size_t>(n_ * n_)},
                  n_, n_, {x.data(), static_cast<std::size_t>(n_)},
                  {y.data(), static_cast<std::size_t>(n_)});
    return y;
  }

  VectorXd g_times(const VectorXd& x) const {
    VectorXd out(m_);
    Index row = 0;
    for (const auto& b : p_.blocks) {
      out.segment(row, b.g.rows()) = b.g * x.segment(b.col, b.g.cols());
      row += b.g.rows();
    }
    return out;
  }

  VectorXd gt_times(const VectorXd& v) const {
    VectorXd out = VectorXd::Zero(n_);
    Index row = 0;
    for (const auto& b : p_.blocks) {
      out.segment(b.col, b.g.cols()) += b.g.transpose() * v.segment(row, b.g.rows());
      row += b.g.rows();
    }
    return out;
  }

  const VectorXd& h() {
    if (h_.size() != m_) {
      h_.resize(m_);
      Index row = 0;
      for (const auto& b : p_.blocks) {
        h_.segment(row, b.h.size()) = b.h;
        row += b.h.size();
      }
    }
    return h_;
  }

  Residuals residuals(const VectorXd& x, const VectorXd& s, const VectorXd& lam) {
    Residuals r;
    r.dual = hess_times(x) + p_.gradient;
    if (m_ > 0) {
      r.dual += gt_times(lam);
      r.primal = g_times(x) + s - h();
      r.mu = s.dot(lam) / static_cast<double>(m_);
    } else {
      r.primal.resize(0);
    }
    return r;
  }

  /// Factors H + G^T diag(w) G.
  bool factor(const VectorXd& w) {
    std::copy(p_.hessian.data(), p_.hessian.data() + n_ * n_, factor_.begin());
    Index row = 0;
    for (const auto& b : p_.blocks) {
      const Index rows = b.g.rows();
      const Eigen::MatrixXd weighted =
          b.g.transpose() * w.segment(row, rows).asDiagonal() * b.g;
      for (Index i = 0; i < weighted.rows(); ++i) {
        for (Index j = 0; j < weighted.cols(); ++j) {
          factor_[static_cast<std::size_t>((b.col + i) * n_ + b.col + j)] +=
              weighted(i, j);
        }
      }
      row += rows;
    }
    return kernels::cholesky_factor(factor_, static_cast<std::size_t>(n_));
  }

  VectorXd solve(VectorXd rhs) const {
    kernels::cholesky_solve(factor_, static_cast<std::size_t>(n_),
                            {rhs.data(), static_cast<std::size_t>(n_)});
    return rhs;
  }

 private:
  const Problem& p_;
  Index n_;
  Index m_;
  std::vector<double> factor_;
  VectorXd h_;
};

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct Direction {
  VectorXd dx, ds, dlam;
};

}  // namespace

Index Problem::num_constraints() const {
  Index m = 0;
  for (const auto& b : blocks) m += b.g.rows();
  return m;
}

double Problem::objective(const VectorXd& x) const {
  return 0.5 * x.dot(hessian * x) + gradient.dot(x);
}

VectorXd Problem::constraint_values(const VectorXd& x) const {
  VectorXd out(num_constraints());
  Index row = 0;
  for (const auto& b : blocks) {
    out.segment(row, b.g.rows()) = b.g * x.segment(b.col, b.g.cols()) - b.h;
    row += b.g.rows();
  }
  return out;
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kSolved: return "solved";
    case Status::kMaxIterations: return "max_iterations";
    case Status::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

Solution solve(const Problem& problem, const Settings& settings,
               const WarmStart* warm) {
  Workspace ws(problem);
  const Index n = ws.n();
  const Index m = ws.m();
  Solution sol;

  VectorXd x = (warm && warm->x.size() == n) ? warm->x : VectorXd::Zero(n);

  if (m == 0) {
    if (!ws.factor(VectorXd())) {
      sol.x = x;
      sol.status = Status::kNumericalFailure;
      return sol;
    }
    sol.x = ws.solve(-problem.gradient);
    Residuals r = ws.residuals(sol.x, VectorXd(), VectorXd());
    sol.dual_residual = inf_norm(r.dual);
    sol.status = sol.dual_residual <= settings.dual_tolerance
                     ? Status::kSolved
                     : Status::kNumericalFailure;
    sol.objective = problem.objective(sol.x);
    return sol;
  }

  const VectorXd& h = ws.h();
  VectorXd s, lam;
  if (warm && warm->slack.size() == m && warm->lambda.size() == m) {
    s = warm->slack.cwiseMax(1e-10);
    lam = warm->lambda.cwiseMax(1e-10);
  } else {
    s = (h - ws.g_times(x)).cwiseMax(1.0);
    lam = VectorXd::Ones(m);
  }

  Residuals r = ws.residuals(x, s, lam);
  sol.gap_history.push_back(r.mu);
  sol.residual_history.push_back(std::max(inf_norm(r.primal), inf_norm(r.dual)));

  auto converged = [&](const Residuals& res) {
    return inf_norm(res.primal) <= settings.primal_tolerance &&
           inf_norm(res.dual) <= settings.dual_tolerance &&
           res.mu <= settings.gap_tolerance;
  };

  sol.status = Status::kMaxIterations;
  int it = 0;
  for (; it < settings.max_iterations && !converged(r); ++it) {
    const VectorXd w = lam.cwiseQuotient(s);
    if (!ws.factor(w)) {
      sol.status = Status::kNumericalFailure;
      break;
    }

    // rc is the complementarity right-hand side: S Lambda e - sigma mu e (+ corrector)
    auto direction = [&](const VectorXd& rc) {
      Direction d;
      const VectorXd rhs =
          -r.dual - ws.gt_times(w.cwiseProduct(r.primal) - rc.cwiseQuotient(s));
      d.dx = ws.solve(rhs);
      d.dlam = w.cwiseProduct(ws.g_times(d.dx) + r.primal) - rc.cwiseQuotient(s);
      d.ds = -(rc + s.cwiseProduct(d.dlam)).cwiseQuotient(lam);
      return d;
    };

    const VectorXd sl = s.cwiseProduct(lam);
    const Direction aff = direction(sl);
    const double alpha_aff = std::min(max_step(s, aff.ds), max_step(lam, aff.dlam));
    const double mu_aff = (s + alpha_aff * aff.ds).dot(lam + alpha_aff * aff.dlam) /
                          static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / r.mu, 0.0, 1.0), 3);

    auto step_with = [&](const Direction& d) {
      double alpha = std::min(1.0, settings.step_fraction *
                                       std::min(max_step(s, d.ds), max_step(lam, d.dlam)));
      // Shorten until the complementarity measure does not grow.
      for (int k = 0; k < 60; ++k) {
        const double mu_new =
            (s + alpha * d.ds).dot(lam + alpha * d.dlam) / static_cast<double>(m);
        if (mu_new <= r.mu) return alpha;
        alpha *= 0.5;
      }
      return 0.0;
    };

    const VectorXd centering = VectorXd::Constant(m, sigma * r.mu);
    Direction dir = direction(sl + aff.ds.cwiseProduct(aff.dlam) - centering);
    double alpha = step_with(dir);
    if (alpha <= 0.0) {
      // Plain centered Newton step: the gap derivative is -(1 - sigma) mu m < 0.
      const double sigma_safe = std::clamp(sigma, 0.1, 0.5);
      dir = direction(sl - VectorXd::Constant(m, sigma_safe * r.mu));
      alpha = step_with(dir);
      if (alpha <= 0.0) {
        sol.status = Status::kNumericalFailure;
        break;
      }
    }

    x += alpha * dir.dx;
    s += alpha * dir.ds;
    lam += alpha * dir.dlam;
    r = ws.residuals(x, s, lam);
    sol.gap_history.push_back(r.mu);
    sol.residual_history.push_back(std::max(inf_norm(r.primal), inf_norm(r.dual)));
  }
  if (converged(r)) sol.status = Status::kSolved;

  sol.x = std::move(x);
  sol.slack = std::move(s);
  sol.lambda = std::move(lam);
  sol.iterations = it;
  sol.primal_residual = inf_norm(r.primal);
  sol.dual_residual = inf_norm(r.dual);
  sol.gap = r.mu;
  sol.objective = problem.objective(sol.x);
  return sol;
}

}  // namespace softarm::qp
