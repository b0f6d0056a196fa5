#pragma once

#include "softarm/types.hpp"

// Angle chart shared by the ball estimator, the planner and the simulator:
// the arm direction is R_x(alpha) R_y(beta) e_z, i.e.
//   (sin(beta), -sin(alpha) cos(beta), cos(alpha) cos(beta)).
// The chart covers the open upper hemisphere |alpha|, |beta| < 90 deg.
namespace softarm::sphere {

Vector3 direction(double alpha, double beta);
inline Vector3 direction(const Setpoint& s) { return direction(s.alpha, s.beta); }

/// Inverse of `direction` for a (not necessarily unit) vector with z > 0.
Setpoint angles(const Vector3& v);

bool in_chart(double alpha, double beta);
inline bool in_chart(const Setpoint& s) { return in_chart(s.alpha, s.beta); }

/// Angle between two directions, robust for nearly parallel vectors.
double angle_between(const Vector3& a, const Vector3& b);

}  // namespace softarm::sphere
