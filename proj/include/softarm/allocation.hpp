#pragma once

#include <vector>

#include "softarm/types.hpp"

namespace softarm::allocation {

/// Default lower pressure level [bar]; fixes the joint stiffness.
inline constexpr double kDefaultPBar = 1.05;
/// Ambient pressure [bar].
inline constexpr double kDefaultPMin = 1.0;
/// Maximum allowed actuator pressure [bar].
inline constexpr double kDefaultPMax = 1.9;

struct ActuatorPressures {
  double p_a = 0.0;
  double p_b = 0.0;
  double p_c = 0.0;
};

/// Pressure differences aligned with the alpha/beta directions plus the
/// lower pressure level.
struct AllocatedInput {
  double dp_alpha = 0.0;
  double dp_beta = 0.0;
  double p_bar = kDefaultPBar;

  Input differences() const { return {dp_alpha, dp_beta}; }
};

/// Half-plane normal . u <= offset.
struct HalfPlane {
  Vector2 normal;
  double offset = 0.0;
};

/// Feasible set of (dp_alpha_sp, dp_beta_sp) as an intersection of half-planes.
struct InputPolytope {
  std::vector<HalfPlane> faces;

  /// Closed-set membership; `tol` widens every face.
  bool contains(const Vector2& u, double tol = 1e-9) const;
  /// Largest face violation (negative when strictly inside).
  double max_violation(const Vector2& u) const;
};

/// Maps (dp_ab, dp_bc) to (dp_alpha, dp_beta).
Matrix2 transform();
Matrix2 transform_inverse();

AllocatedInput xi(const ActuatorPressures& p);
ActuatorPressures xi_inv(const AllocatedInput& v);

/// Pressure-box constraints p_min <= p_{A,B,C} <= p_max with fixed p_bar,
/// expressed in (dp_alpha, dp_beta). Throws std::invalid_argument unless
/// p_min <= p_bar < p_max.
InputPolytope build_input_polytope(double p_min, double p_max, double p_bar);

}  // namespace softarm::allocation
