#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "softarm/allocation.hpp"
#include "softarm/dynamics.hpp"

namespace softarm::sysid {

class SysIdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniformly sampled identification record.
struct ExperimentLog {
  std::vector<double> t;
  std::vector<double> alpha, beta;
  std::vector<double> dp_alpha, dp_beta;
  std::vector<double> dp_alpha_sp, dp_beta_sp;

  std::size_t size() const { return t.size(); }
  /// Throws SysIdError unless timestamps increase with uniform spacing and
  /// all columns have equal length.
  void validate() const;
  double sample_time() const;

  /// Header `t,alpha,beta,dp_alpha,dp_beta,dp_alpha_sp,dp_beta_sp`.
  void write_csv(const std::filesystem::path& path) const;
  std::string to_csv() const;
  static ExperimentLog read_csv(const std::filesystem::path& path);
  static ExperimentLog parse_csv(const std::string& text);
};

enum class ExcitationKind { kSinusoidSweep, kSteps };

struct ExcitationConfig {
  std::vector<double> frequencies = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0};  ///< [Hz]
  double duration_per_frequency = 10.0;                                 ///< [s]
  double sinusoid_amplitude = 0.1;                                      ///< [bar]
  std::vector<double> step_amplitudes = {0.1, 0.2, 0.3};                ///< [bar]
  double step_hold = 1.0;                                               ///< [s]
  double sample_rate = 200.0;                                           ///< [Hz]
  allocation::InputPolytope polytope = allocation::build_input_polytope(
      allocation::kDefaultPMin, allocation::kDefaultPMax, allocation::kDefaultPBar);
};

/// Piecewise-constant set point schedule sampled at the configured rate.
struct InputSchedule {
  std::vector<double> t;
  std::vector<Input> u;

  double duration() const;
};

/// Sinusoid sweep: equal time per frequency on both inputs, beta running the
/// band in reverse order so the axes are not excited identically. Steps: every nonzero grid pair (both signs, both axes)
/// held for `step_hold`, separated by returns to zero. Throws SysIdError when
/// any scheduled point leaves the input polytope.
InputSchedule generate_excitation(ExcitationKind kind, const ExcitationConfig& cfg);

/// Runs a schedule on the true plant from rest and records the log. The
/// pressure controller sees the schedule as a piecewise-linear set point
/// through the samples.
ExperimentLog record_experiment(const InputSchedule& schedule,
                                const dynamics::TruePlantConfig& plant,
                                unsigned long long seed = 0);

struct DifferentiationConfig {
  int window = 25;  ///< odd number of samples
  int order = 6;    ///< local polynomial degree
  /// Set point changes larger than this between samples count as jumps [bar].
  double jump_threshold = 0.05;
};

/// Log plus local-polynomial derivatives at every sample. `valid` is false on
/// the half-window at either end and wherever the window straddles a set
/// point jump.
struct AugmentedLog {
  ExperimentLog log;
  std::vector<double> alpha_dot, alpha_ddot, beta_dot, beta_ddot;
  std::vector<double> dp_alpha_dot, dp_beta_dot;
  std::vector<bool> valid;
};

/// Least-squares local polynomial (Savitzky-Golay) derivative filters.
struct DerivativeFilter {
  std::vector<double> first;   ///< includes 1/dt
  std::vector<double> second;  ///< includes 1/dt^2

  static DerivativeFilter build(int window, int order, double dt);
};

/// Throws SysIdError for logs shorter than max(10, window) samples.
AugmentedLog differentiate(const ExperimentLog& log,
                           const DifferentiationConfig& cfg = {});

struct RegressionReport {
  std::string name;
  std::vector<double> coefficients;
  double residual_norm = 0.0;  ///< RMS residual in physical units
  double condition = 0.0;      ///< of the (normalized) regressor matrix
  std::size_t samples = 0;
};

struct FitOptions {
  bool normalize = true;
  /// Condition number above which a conditioning warning is recorded.
  double warn_condition = 10.0;
  /// Treated as rank deficient above this.
  double max_condition = 1e10;
};

struct FitResult {
  dynamics::ModelParams params;
  RegressionReport arm_alpha, arm_beta, pressure_alpha, pressure_beta;
  std::vector<std::string> warnings;

  double total_residual() const;
};

/// Four independent least-squares regressions: (k, d, h) per axis from the
/// arm equation and (1/tau, c) per axis from the pressure equation. Columns
/// are scaled to [-1, 1] before solving and coefficients scaled back after.
/// Throws SysIdError naming the axis on rank deficiency.
FitResult fit_model(const AugmentedLog& arm_data, const AugmentedLog& pressure_data,
                    const FitOptions& options = {});
FitResult fit_model(const AugmentedLog& data, const FitOptions& options = {});

}  // namespace softarm::sysid
