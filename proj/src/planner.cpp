#include "softarm/planner.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "softarm/sphere.hpp"

namespace softarm::planner {

PlannedTrajectory plan(const Setpoint& current, const Setpoint& target,
                       double omega, double ts, int horizon) {
  if (!sphere::in_chart(current) || !sphere::in_chart(target)) {
    throw std::invalid_argument(fmt::format(
        "plan endpoints ({}, {}) -> ({}, {}) outside the angle chart",
        current.alpha, current.beta, target.alpha, target.beta));
  }
  if (!(omega > 0.0) || !(ts > 0.0) || horizon < 0) {
    throw std::invalid_argument("plan: omega, ts must be positive");
  }

  const Vector3 from = sphere::direction(current);
  const Vector3 to = sphere::direction(target);
  const double theta = sphere::angle_between(from, to);
  // Both endpoints lie in the open upper hemisphere.
  assert(theta < std::numbers::pi);

  PlannedTrajectory out;
  out.arc_angle = theta;
  const double steps = theta / (omega * ts);
  out.segments = theta > 1e-12 ? static_cast<int>(std::ceil(steps - 1e-9)) : 0;
  out.segments = std::max(out.segments, theta > 1e-12 ? 1 : 0);

  const std::size_t count = static_cast<std::size_t>(horizon) + 1;
  out.setpoints.reserve(count);
  if (out.segments == 0) {
    out.setpoints.assign(count, current);
    return out;
  }

  const double sin_theta = std::sin(theta);
  const int m = out.segments;
  for (std::size_t i = 0; i < count; ++i) {
    const int k = std::min(static_cast<int>(i), m);
    if (k == 0) {
      out.setpoints.push_back(current);
    } else if (k == m) {
      out.setpoints.push_back(target);
    } else {
      const double s = static_cast<double>(k) / m;
      const Vector3 v = (std::sin((1.0 - s) * theta) * from +
                         std::sin(s * theta) * to) / sin_theta;
      out.setpoints.push_back(sphere::angles(v));
    }
  }
  return out;
}

}  // namespace softarm::planner
