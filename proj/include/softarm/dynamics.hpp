#pragma once

#include <string>

#include "softarm/allocation.hpp"
#include "softarm/config.hpp"
#include "softarm/types.hpp"

namespace softarm::dynamics {

/// Mass-normalized spring-damper arm axis driven by a first-order closed-loop
/// pressure difference.
struct AxisParams {
  double k = 230.0;   ///< stiffness [1/s^2]
  double d = 6.0;     ///< damping [1/s]
  double h = 530.0;   ///< pressure-to-acceleration gain [(rad/s^2)/bar]
  double tau = 0.05;  ///< pressure time constant [s]
  double c = 0.01;    ///< arm-rate to pressure-rate coupling [bar/rad]
};

struct ModelParams {
  AxisParams alpha;
  AxisParams beta;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  static ModelParams from_config(const KeyValueConfig& cfg,
                                 const std::string& prefix = "");
  void to_config(KeyValueConfig& cfg, const std::string& prefix = "") const;
};

struct ContinuousModel {
  Matrix6 a_c = Matrix6::Zero();
  Matrix62 b_c = Matrix62::Zero();
};

/// x(k+1) = A x(k) + B u(k) + E d(k)
struct DiscreteModel {
  Matrix6 a = Matrix6::Identity();
  Matrix62 b = Matrix62::Zero();
  Matrix6 e = Matrix6::Zero();
  double ts = 0.0;

  ArmState step(const ArmState& x, const Input& u, const Disturbance& d) const {
    return a * x + b * u + e * d;
  }
};

/// Simulated ground truth with deliberate structural mismatch against the
/// linear model: a cross-axis coupling torque and a slowly building
/// relaxation torque on the alpha axis.
struct TruePlantConfig {
  ModelParams base;
  double coupling_gain = 0.0;         ///< [rad/s^2]
  double relaxation_amplitude = 0.0;  ///< [rad/s^2]
  double relaxation_timescale = 1.0;  ///< [s]
  double noise_std_angle = 0.0;       ///< [rad], applied by the harness
  double noise_std_pressure = 0.0;    ///< [bar], applied by the harness

  void validate() const;

  static TruePlantConfig from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

/// Throws std::invalid_argument for a nonpositive time constant.
ContinuousModel build_continuous(const ModelParams& params);

/// Exact zero-order-hold discretization; E integrates the identity-gain
/// disturbance channel over one period.
DiscreteModel discretize(const ContinuousModel& model, double ts);

/// Continuous-time right-hand side of the true plant.
ArmState true_plant_derivative(const ArmState& x, const Input& u_sp,
                               const TruePlantConfig& cfg, double t);

/// Advances the true plant by `ts` using `substeps` RK4 steps (at least 4).
ArmState step_true_plant(const ArmState& x, const allocation::AllocatedInput& u,
                         const TruePlantConfig& cfg, double t, double ts,
                         int substeps = 4);

/// Convenience: discretized nominal model for the given parameters.
DiscreteModel nominal_discrete(const ModelParams& params, double ts);

}  // namespace softarm::dynamics
