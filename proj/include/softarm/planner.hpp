#pragma once

#include <vector>

#include "softarm/types.hpp"

namespace softarm::planner {

/// Default setpoint angular velocity: 240 deg/s.
inline constexpr double kDefaultOmega = 4.1887902047863905;

struct PlannedTrajectory {
  std::vector<Setpoint> setpoints;  ///< exactly N+1 entries
  double arc_angle = 0.0;           ///< great-circle angle between endpoints
  int segments = 0;                 ///< M = ceil(theta / (omega Ts))
};

/// Great-circle setpoint trajectory from `current` to `target` at constant
/// angular speed `omega` [rad/s]. Waypoints are spherical interpolations of
/// the endpoint directions; the terminal point repeats to fill N+1 entries.
/// Throws std::invalid_argument when either endpoint lies outside the chart.
PlannedTrajectory plan(const Setpoint& current, const Setpoint& target,
                       double omega, double ts, int horizon);

}  // namespace softarm::planner
