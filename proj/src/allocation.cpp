#include "softarm/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace softarm::allocation {

namespace {

constexpr double kHalfSqrt3 = 0.86602540378443864676;

}  // namespace

Matrix2 transform() {
  Matrix2 t;
  t << 0.0, kHalfSqrt3,
      -1.0, -0.5;
  return t;
}

Matrix2 transform_inverse() {
  // det(T) = sqrt(3)/2
  Matrix2 t_inv;
  t_inv << -0.5 / kHalfSqrt3, -1.0,
           1.0 / kHalfSqrt3, 0.0;
  return t_inv;
}

AllocatedInput xi(const ActuatorPressures& p) {
  const double dp_ab = p.p_a - p.p_b;
  const double dp_bc = p.p_b - p.p_c;
  return {kHalfSqrt3 * dp_bc, -dp_ab - 0.5 * dp_bc,
          std::min({p.p_a, p.p_b, p.p_c})};
}

ActuatorPressures xi_inv(const AllocatedInput& v) {
  const Vector2 d = transform_inverse() * v.differences();
  const double dp_ab = d(0);
  const double dp_bc = d(1);
  const double pb = v.p_bar;
  return {std::max({pb, pb + dp_ab, pb + dp_ab + dp_bc}),
          std::max({pb, pb + dp_bc, pb - dp_ab}),
          std::max({pb, pb - dp_bc, pb - dp_ab - dp_bc})};
}

bool InputPolytope::contains(const Vector2& u, double tol) const {
  return max_violation(u) <= tol;
}

double InputPolytope::max_violation(const Vector2& u) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : faces) {
    worst = std::max(worst, f.normal.dot(u) - f.offset);
  }
  return worst;
}

InputPolytope build_input_polytope(double p_min, double p_max, double p_bar) {
  if (!(p_min <= p_bar)) {
    throw std::invalid_argument(
        fmt::format("p_bar {} below p_min {}", p_bar, p_min));
  }
  if (!(p_bar < p_max)) {
    throw std::invalid_argument(fmt::format(
        "p_bar {} must be below p_max {} (empty constraint set)", p_bar, p_max));
  }
  // With min pressure pinned at p_bar >= p_min, only the upper bounds bind:
  // the pressure spread max{|dp_ab|, |dp_bc|, |dp_ab + dp_bc|} <= p_max - p_bar.
  const double spread = p_max - p_bar;
  const Matrix2 t_inv = transform_inverse();
  const Eigen::RowVector2d rows[3] = {t_inv.row(0), t_inv.row(1),
                                      t_inv.row(0) + t_inv.row(1)};
  InputPolytope poly;
  for (const auto& r : rows) {
    poly.faces.push_back({r.transpose(), spread});
    poly.faces.push_back({-r.transpose(), spread});
  }
  return poly;
}

}  // namespace softarm::allocation
