#include "softarm/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace softarm::dynamics {

namespace {

void check_axis(const AxisParams& p, const char* axis) {
  auto bad = [axis](const char* field, double v) {
    return std::invalid_argument(
        fmt::format("model parameter {}_{} = {} is invalid", field, axis, v));
  };
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw bad("tau", p.tau);
  if (!(p.k > 0.0) || !std::isfinite(p.k)) throw bad("k", p.k);
  if (!(p.d > 0.0) || !std::isfinite(p.d)) throw bad("d", p.d);
  if (p.h == 0.0 || !std::isfinite(p.h)) throw bad("h", p.h);
  if (!std::isfinite(p.c)) throw bad("c", p.c);
}

AxisParams axis_from_config(const KeyValueConfig& cfg, const std::string& prefix,
                            const char* axis, const AxisParams& fallback) {
  auto key = [&](const char* name) {
    return fmt::format("{}{}_{}", prefix, name, axis);
  };
  AxisParams p;
  p.k = cfg.get_double(key("k"), fallback.k);
  p.d = cfg.get_double(key("d"), fallback.d);
  p.h = cfg.get_double(key("h"), fallback.h);
  p.tau = cfg.get_double(key("tau"), fallback.tau);
  p.c = cfg.get_double(key("c"), fallback.c);
  return p;
}

void axis_to_config(const AxisParams& p, KeyValueConfig& cfg,
                    const std::string& prefix, const char* axis) {
  auto key = [&](const char* name) {
    return fmt::format("{}{}_{}", prefix, name, axis);
  };
  cfg.set(key("k"), p.k);
  cfg.set(key("d"), p.d);
  cfg.set(key("h"), p.h);
  cfg.set(key("tau"), p.tau);
  cfg.set(key("c"), p.c);
}

void fill_axis_block(const AxisParams& p, int offset, ContinuousModel& m) {
  m.a_c(offset + 0, offset + 1) = 1.0;
  m.a_c(offset + 1, offset + 0) = -p.k;
  m.a_c(offset + 1, offset + 1) = -p.d;
  m.a_c(offset + 1, offset + 2) = p.h;
  m.a_c(offset + 2, offset + 1) = p.c;
  m.a_c(offset + 2, offset + 2) = -1.0 / p.tau;
}

}  // namespace

void ModelParams::validate() const {
  check_axis(alpha, "alpha");
  check_axis(beta, "beta");
}

ModelParams ModelParams::from_config(const KeyValueConfig& cfg,
                                     const std::string& prefix) {
  const ModelParams defaults;
  ModelParams p;
  p.alpha = axis_from_config(cfg, prefix, "alpha", defaults.alpha);
  p.beta = axis_from_config(cfg, prefix, "beta", defaults.beta);
  return p;
}

void ModelParams::to_config(KeyValueConfig& cfg, const std::string& prefix) const {
  axis_to_config(alpha, cfg, prefix, "alpha");
  axis_to_config(beta, cfg, prefix, "beta");
}

void TruePlantConfig::validate() const {
  base.validate();
  const double knobs[] = {coupling_gain, relaxation_amplitude,
                          noise_std_angle, noise_std_pressure};
  for (double v : knobs) {
    if (!std::isfinite(v)) throw std::invalid_argument("plant knob not finite");
  }
  if (noise_std_angle < 0.0 || noise_std_pressure < 0.0) {
    throw std::invalid_argument("noise standard deviations must be nonnegative");
  }
  if (!(relaxation_timescale > 0.0)) {
    throw std::invalid_argument("relaxation_timescale must be positive");
  }
}

TruePlantConfig TruePlantConfig::from_config(const KeyValueConfig& cfg) {
  TruePlantConfig p;
  p.base = ModelParams::from_config(cfg, "plant.");
  p.coupling_gain = cfg.get_double("plant.coupling_gain", p.coupling_gain);
  p.relaxation_amplitude =
      cfg.get_double("plant.relaxation_amplitude", p.relaxation_amplitude);
  p.relaxation_timescale =
      cfg.get_double("plant.relaxation_timescale", p.relaxation_timescale);
  p.noise_std_angle = cfg.get_double("plant.noise_std_angle", p.noise_std_angle);
  p.noise_std_pressure =
      cfg.get_double("plant.noise_std_pressure", p.noise_std_pressure);
  p.validate();
  return p;
}

void TruePlantConfig::to_config(KeyValueConfig& cfg) const {
  base.to_config(cfg, "plant.");
  cfg.set("plant.coupling_gain", coupling_gain);
  cfg.set("plant.relaxation_amplitude", relaxation_amplitude);
  cfg.set("plant.relaxation_timescale", relaxation_timescale);
  cfg.set("plant.noise_std_angle", noise_std_angle);
  cfg.set("plant.noise_std_pressure", noise_std_pressure);
}

ContinuousModel build_continuous(const ModelParams& params) {
  params.validate();
  ContinuousModel m;
  fill_axis_block(params.alpha, idx::kAlpha, m);
  fill_axis_block(params.beta, idx::kBeta, m);
  m.b_c(idx::kDpAlpha, 0) = 1.0 / params.alpha.tau;
  m.b_c(idx::kDpBeta, 1) = 1.0 / params.beta.tau;
  return m;
}

DiscreteModel discretize(const ContinuousModel& model, double ts) {
  if (!(ts > 0.0)) throw std::invalid_argument("sampling time must be positive");
  constexpr int n = kNumStates;
  constexpr int m = kNumInputs;
  // exp([A_c B_c I; 0 0 0; 0 0 0] ts) = [A B E; 0 I 0; 0 0 I]
  Eigen::Matrix<double, 2 * n + m, 2 * n + m> aug;
  aug.setZero();
  aug.block<n, n>(0, 0) = model.a_c;
  aug.block<n, m>(0, n) = model.b_c;
  aug.block<n, n>(0, n + m) = Matrix6::Identity();
  const Eigen::Matrix<double, 2 * n + m, 2 * n + m> phi = (aug * ts).exp();

  DiscreteModel d;
  d.a = phi.block<n, n>(0, 0);
  d.b = phi.block<n, m>(0, n);
  d.e = phi.block<n, n>(0, n + m);
  d.ts = ts;
  return d;
}

DiscreteModel nominal_discrete(const ModelParams& params, double ts) {
  return discretize(build_continuous(params), ts);
}

ArmState true_plant_derivative(const ArmState& x, const Input& u_sp,
                               const TruePlantConfig& cfg, double t) {
  const auto& pa = cfg.base.alpha;
  const auto& pb = cfg.base.beta;
  const double coupling =
      cfg.coupling_gain * std::sin(x(idx::kAlpha)) * std::sin(x(idx::kBeta));
  const double relaxation =
      cfg.relaxation_amplitude *
      (1.0 - std::exp(-std::max(t, 0.0) / cfg.relaxation_timescale));

  ArmState dx;
  dx(idx::kAlpha) = x(idx::kAlphaDot);
  dx(idx::kAlphaDot) = -pa.k * x(idx::kAlpha) - pa.d * x(idx::kAlphaDot) +
                       pa.h * x(idx::kDpAlpha) + coupling + relaxation;
  dx(idx::kDpAlpha) =
      (u_sp(0) - x(idx::kDpAlpha)) / pa.tau + pa.c * x(idx::kAlphaDot);
  dx(idx::kBeta) = x(idx::kBetaDot);
  dx(idx::kBetaDot) = -pb.k * x(idx::kBeta) - pb.d * x(idx::kBetaDot) +
                      pb.h * x(idx::kDpBeta) + coupling;
  dx(idx::kDpBeta) =
      (u_sp(1) - x(idx::kDpBeta)) / pb.tau + pb.c * x(idx::kBetaDot);
  return dx;
}

ArmState step_true_plant(const ArmState& x, const allocation::AllocatedInput& u,
                         const TruePlantConfig& cfg, double t, double ts,
                         int substeps) {
  if (!(ts > 0.0)) throw std::invalid_argument("step must be positive");
  substeps = std::max(substeps, 4);
  const Input u_sp = u.differences();
  const double h = ts / substeps;
  ArmState state = x;
  double time = t;
  for (int i = 0; i < substeps; ++i) {
    const ArmState k1 = true_plant_derivative(state, u_sp, cfg, time);
    const ArmState k2 =
        true_plant_derivative(state + 0.5 * h * k1, u_sp, cfg, time + 0.5 * h);
    const ArmState k3 =
        true_plant_derivative(state + 0.5 * h * k2, u_sp, cfg, time + 0.5 * h);
    const ArmState k4 = true_plant_derivative(state + h * k3, u_sp, cfg, time + h);
    state += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    time += h;
  }
  return state;
}

}  // namespace softarm::dynamics
