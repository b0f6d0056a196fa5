#include "softarm/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

namespace softarm::sphere {

Vector3 direction(double alpha, double beta) {
  return {std::sin(beta), -std::sin(alpha) * std::cos(beta),
          std::cos(alpha) * std::cos(beta)};
}

Setpoint angles(const Vector3& v) {
  const Vector3 u = v.normalized();
  return {std::atan2(-u.y(), u.z()), std::asin(std::clamp(u.x(), -1.0, 1.0))};
}

bool in_chart(double alpha, double beta) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  return std::isfinite(alpha) && std::isfinite(beta) && std::abs(alpha) < half_pi &&
         std::abs(beta) < half_pi;
}

double angle_between(const Vector3& a, const Vector3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace softarm::sphere
