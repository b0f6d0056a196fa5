#include "softarm/sysid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "softarm/config.hpp"

namespace softarm::sysid {

namespace {

constexpr const char* kHeader = "t,alpha,beta,dp_alpha,dp_beta,dp_alpha_sp,dp_beta_sp";

double parse_field(std::string_view s, int line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw SysIdError(fmt::format("experiment log line {}: '{}' is not a number", line, s));
  }
  return value;
}

std::vector<double> convolve_at(const std::vector<double>& x,
                                const std::vector<double>& filter,
                                const std::vector<bool>& interior) {
  const int n = static_cast<int>(x.size());
  const int half = static_cast<int>(filter.size()) / 2;
  std::vector<double> out(x.size(), 0.0);
  for (int i = half; i + half < n; ++i) {
    if (!interior[i]) continue;
    double acc = 0.0;
    for (int j = -half; j <= half; ++j) acc += filter[j + half] * x[i + j];
    out[i] = acc;
  }
  return out;
}

struct Regression {
  Eigen::VectorXd coef;
  double rms = 0.0;
  double condition = 0.0;
};

Regression regress(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const FitOptions& opt, const std::string& name) {
  const Eigen::Index cols = x.cols();
  Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(cols);
  double y_scale = 1.0;
  if (opt.normalize) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      col_scale(j) = x.col(j).cwiseAbs().maxCoeff();
      if (!(col_scale(j) > 0.0)) {
        throw SysIdError(fmt::format(
            "{}: regressor column {} is identically zero (rank deficient)", name, j));
      }
    }
    y_scale = y.cwiseAbs().maxCoeff();
    if (!(y_scale > 0.0)) y_scale = 1.0;
  }
  const Eigen::MatrixXd xn = x * col_scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd yn = y / y_scale;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xn);
  Regression out;
  if (qr.rank() < cols) {
    throw SysIdError(fmt::format("{}: regressor matrix has rank {} < {}", name,
                                 qr.rank(), cols));
  }
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  out.condition = sv(0) / sv(cols - 1);
  if (!std::isfinite(out.condition) || out.condition > opt.max_condition) {
    throw SysIdError(fmt::format("{}: regressor matrix is rank deficient (condition {:.3g})",
                                 name, out.condition));
  }
  const Eigen::VectorXd bn = qr.solve(yn);
  out.coef = (bn.array() * y_scale / col_scale.array()).matrix();
  const Eigen::VectorXd res = y - x * out.coef;
  out.rms = std::sqrt(res.squaredNorm() / static_cast<double>(y.size()));
  return out;
}

std::vector<std::size_t> valid_rows(const AugmentedLog& data) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.valid.size(); ++i) {
    if (data.valid[i]) rows.push_back(i);
  }
  return rows;
}

RegressionReport arm_regression(const AugmentedLog& data, bool beta_axis,
                                const FitOptions& opt, std::vector<std::string>& warnings) {
  const auto rows = valid_rows(data);
  const char* axis = beta_axis ? "beta" : "alpha";
  const std::string name = fmt::format("arm regression ({} axis)", axis);
  if (rows.size() < 3) {
    throw SysIdError(fmt::format("{}: only {} usable samples", name, rows.size()));
  }
  const auto& angle = beta_axis ? data.log.beta : data.log.alpha;
  const auto& rate = beta_axis ? data.beta_dot : data.alpha_dot;
  const auto& accel = beta_axis ? data.beta_ddot : data.alpha_ddot;
  const auto& dp = beta_axis ? data.log.dp_beta : data.log.dp_alpha;

  Eigen::MatrixXd x(rows.size(), 3);
  Eigen::VectorXd y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    x.row(r) << angle[i], rate[i], dp[i];
    y(r) = accel[i];
  }
  const Regression reg = regress(x, y, opt, name);
  if (reg.condition > opt.warn_condition) {
    warnings.push_back(fmt::format(
        "{}: poorly conditioned regressors (condition {:.3g}); damping estimate is "
        "unreliable, add excitation at more frequencies",
        name, reg.condition));
  }
  RegressionReport rep;
  rep.name = name;
  rep.coefficients = {reg.coef(0), reg.coef(1), reg.coef(2)};
  rep.residual_norm = reg.rms;
  rep.condition = reg.condition;
  rep.samples = rows.size();
  return rep;
}

RegressionReport pressure_regression(const AugmentedLog& data, bool beta_axis,
                                     const FitOptions& opt,
                                     std::vector<std::string>& warnings) {
  const auto rows = valid_rows(data);
  const char* axis = beta_axis ? "beta" : "alpha";
  const std::string name = fmt::format("pressure regression ({} axis)", axis);
  if (rows.size() < 2) {
    throw SysIdError(fmt::format("{}: only {} usable samples", name, rows.size()));
  }
  const auto& rate = beta_axis ? data.beta_dot : data.alpha_dot;
  const auto& dp = beta_axis ? data.log.dp_beta : data.log.dp_alpha;
  const auto& sp = beta_axis ? data.log.dp_beta_sp : data.log.dp_alpha_sp;
  const auto& dp_dot = beta_axis ? data.dp_beta_dot : data.dp_alpha_dot;

  Eigen::MatrixXd x(rows.size(), 2);
  Eigen::VectorXd y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    x.row(r) << sp[i] - dp[i], rate[i];
    y(r) = dp_dot[i];
  }
  const Regression reg = regress(x, y, opt, name);
  if (reg.condition > opt.warn_condition) {
    warnings.push_back(
        fmt::format("{}: poorly conditioned regressors (condition {:.3g})", name,
                    reg.condition));
  }
  RegressionReport rep;
  rep.name = name;
  rep.coefficients = {reg.coef(0), reg.coef(1)};
  rep.residual_norm = reg.rms;
  rep.condition = reg.condition;
  rep.samples = rows.size();
  return rep;
}

}  // namespace

void ExperimentLog::validate() const {
  const std::size_t n = t.size();
  for (const auto* col : {&alpha, &beta, &dp_alpha, &dp_beta, &dp_alpha_sp, &dp_beta_sp}) {
    if (col->size() != n) throw SysIdError("experiment log columns differ in length");
  }
  if (n < 2) return;
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw SysIdError("experiment log timestamps must increase");
  for (std::size_t i = 1; i < n; ++i) {
    const double step = t[i] - t[i - 1];
    if (!(step > 0.0)) {
      throw SysIdError(fmt::format("experiment log timestamp {} does not increase", i));
    }
    if (std::abs(step - dt) > 1e-6 * dt + 1e-12) {
      throw SysIdError(fmt::format("experiment log spacing is not uniform at sample {}", i));
    }
  }
}

double ExperimentLog::sample_time() const {
  if (t.size() < 2) throw SysIdError("experiment log needs at least two samples");
  return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

std::string ExperimentLog::to_csv() const {
  std::string out = kHeader;
  out += '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += fmt::format("{},{},{},{},{},{},{}\n", format_number(t[i]),
                       format_number(alpha[i]), format_number(beta[i]),
                       format_number(dp_alpha[i]), format_number(dp_beta[i]),
                       format_number(dp_alpha_sp[i]), format_number(dp_beta_sp[i]));
  }
  return out;
}

void ExperimentLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SysIdError(fmt::format("cannot write {}", path.string()));
  f << to_csv();
}

ExperimentLog ExperimentLog::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  ExperimentLog log;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader) {
        throw SysIdError(fmt::format("experiment log line {}: expected header '{}'",
                                     line_no, kHeader));
      }
      header_seen = true;
      continue;
    }
    std::vector<double> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(parse_field(rest.substr(0, comma), line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 7) {
      throw SysIdError(fmt::format("experiment log line {}: expected 7 fields, got {}",
                                   line_no, fields.size()));
    }
    log.t.push_back(fields[0]);
    log.alpha.push_back(fields[1]);
    log.beta.push_back(fields[2]);
    log.dp_alpha.push_back(fields[3]);
    log.dp_beta.push_back(fields[4]);
    log.dp_alpha_sp.push_back(fields[5]);
    log.dp_beta_sp.push_back(fields[6]);
  }
  if (!header_seen) throw SysIdError("experiment log is empty");
  log.validate();
  return log;
}

ExperimentLog ExperimentLog::read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SysIdError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

double InputSchedule::duration() const {
  if (t.size() < 2) return 0.0;
  return t.back() - t.front() + (t[1] - t[0]);
}

InputSchedule generate_excitation(ExcitationKind kind, const ExcitationConfig& cfg) {
  if (!(cfg.sample_rate > 0.0)) throw SysIdError("sample rate must be positive");
  const double dt = 1.0 / cfg.sample_rate;
  InputSchedule out;
  auto push = [&](double a, double b) {
    const Input u(a, b);
    if (!cfg.polytope.contains(u)) {
      throw SysIdError(fmt::format(
          "excitation point ({}, {}) bar lies outside the input polytope", a, b));
    }
    out.t.push_back(static_cast<double>(out.t.size()) * dt);
    out.u.push_back(u);
  };

  if (kind == ExcitationKind::kSinusoidSweep) {
    if (cfg.frequencies.empty()) throw SysIdError("sinusoid sweep needs frequencies");
    if (!(cfg.duration_per_frequency > 0.0)) {
      throw SysIdError("sinusoid duration must be positive");
    }
    const auto per = static_cast<std::size_t>(
        std::llround(cfg.duration_per_frequency * cfg.sample_rate));
    const std::size_t nf = cfg.frequencies.size();
    for (std::size_t i = 0; i < nf; ++i) {
      const double fa = cfg.frequencies[i];
      const double fb = cfg.frequencies[nf - 1 - i];
      if (!(fa > 0.0)) throw SysIdError("sweep frequencies must be positive");
      for (std::size_t k = 0; k < per; ++k) {
        const double tau = static_cast<double>(k) * dt;
        push(cfg.sinusoid_amplitude * std::sin(2.0 * std::numbers::pi * fa * tau),
             cfg.sinusoid_amplitude * std::sin(2.0 * std::numbers::pi * fb * tau));
      }
    }
    return out;
  }

  if (cfg.step_amplitudes.empty()) throw SysIdError("step excitation needs amplitudes");
  if (!(cfg.step_hold > 0.0)) throw SysIdError("step hold must be positive");
  std::vector<double> levels{0.0};
  for (double a : cfg.step_amplitudes) {
    if (!(a > 0.0)) throw SysIdError("step amplitudes must be positive");
    levels.push_back(a);
    levels.push_back(-a);
  }
  std::sort(levels.begin(), levels.end());
  const auto hold =
      static_cast<std::size_t>(std::llround(cfg.step_hold * cfg.sample_rate));
  for (double a : levels) {
    for (double b : levels) {
      if (a == 0.0 && b == 0.0) continue;
      for (std::size_t k = 0; k < hold; ++k) push(a, b);
      for (std::size_t k = 0; k < hold; ++k) push(0.0, 0.0);
    }
  }
  return out;
}

ExperimentLog record_experiment(const InputSchedule& schedule,
                                const dynamics::TruePlantConfig& plant,
                                unsigned long long seed) {
  if (schedule.t.size() < 2) throw SysIdError("schedule needs at least two samples");
  const double dt = schedule.t[1] - schedule.t[0];
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noisy = [&](double value, double std) {
    return std > 0.0 ? value + std * gauss(rng) : value;
  };

  ExperimentLog log;
  ArmState x = ArmState::Zero();
  constexpr int kSlices = 10;
  const double h = dt / kSlices;
  for (std::size_t k = 0; k < schedule.t.size(); ++k) {
    const Input& u = schedule.u[k];
    const Input& next = k + 1 < schedule.u.size() ? schedule.u[k + 1] : u;
    log.t.push_back(schedule.t[k]);
    log.alpha.push_back(noisy(x(idx::kAlpha), plant.noise_std_angle));
    log.beta.push_back(noisy(x(idx::kBeta), plant.noise_std_angle));
    log.dp_alpha.push_back(noisy(x(idx::kDpAlpha), plant.noise_std_pressure));
    log.dp_beta.push_back(noisy(x(idx::kDpBeta), plant.noise_std_pressure));
    log.dp_alpha_sp.push_back(u(0));
    log.dp_beta_sp.push_back(u(1));
    for (int j = 0; j < kSlices; ++j) {
      const double s = (j + 0.5) / kSlices;
      const Input sp = (1.0 - s) * u + s * next;
      x = dynamics::step_true_plant(x, {sp(0), sp(1), allocation::kDefaultPBar}, plant,
                                    schedule.t[k] + j * h, h);
    }
  }
  return log;
}

DerivativeFilter DerivativeFilter::build(int window, int order, double dt) {
  if (window < 3 || window % 2 == 0) {
    throw SysIdError(fmt::format("differentiation window {} must be odd and >= 3", window));
  }
  if (order < 2 || order >= window) {
    throw SysIdError(fmt::format("polynomial order {} must lie in [2, window)", order));
  }
  const int half = window / 2;
  Eigen::MatrixXd v(window, order + 1);
  for (int i = 0; i < window; ++i) {
    const double s = static_cast<double>(i - half) / half;
    double pw = 1.0;
    for (int p = 0; p <= order; ++p) {
      v(i, p) = pw;
      pw *= s;
    }
  }
  // Rows of the pseudo-inverse map samples to polynomial coefficients in s.
  const Eigen::MatrixXd pinv = v.colPivHouseholderQr().solve(
      Eigen::MatrixXd::Identity(window, window));
  const double scale = half * dt;
  DerivativeFilter f;
  f.first.resize(window);
  f.second.resize(window);
  for (int i = 0; i < window; ++i) {
    f.first[i] = pinv(1, i) / scale;
    f.second[i] = 2.0 * pinv(2, i) / (scale * scale);
  }
  return f;
}

AugmentedLog differentiate(const ExperimentLog& log, const DifferentiationConfig& cfg) {
  const std::size_t min_samples =
      std::max<std::size_t>(10, static_cast<std::size_t>(std::max(cfg.window, 0)));
  if (log.size() < min_samples) {
    throw SysIdError(fmt::format("experiment log has {} samples, need at least {}",
                                 log.size(), min_samples));
  }
  log.validate();
  const double dt = log.sample_time();
  const DerivativeFilter filter = DerivativeFilter::build(cfg.window, cfg.order, dt);

  const std::size_t n = log.size();
  const std::size_t half = static_cast<std::size_t>(cfg.window / 2);
  AugmentedLog out;
  out.log = log;
  out.valid.assign(n, false);

  // Samples whose window sees a set point jump are excluded.
  std::vector<int> jumps_upto(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool jump =
        i > 0 && (std::abs(log.dp_alpha_sp[i] - log.dp_alpha_sp[i - 1]) > cfg.jump_threshold ||
                  std::abs(log.dp_beta_sp[i] - log.dp_beta_sp[i - 1]) > cfg.jump_threshold);
    jumps_upto[i + 1] = jumps_upto[i] + (jump ? 1 : 0);
  }
  for (std::size_t i = half; i + half < n; ++i) {
    // Jump at sample j means a change between j-1 and j; the window spans
    // [i-half, i+half] so changes at j in (i-half, i+half] matter.
    out.valid[i] = jumps_upto[i + half + 1] - jumps_upto[i - half + 1] == 0;
  }

  std::vector<bool> interior(n, false);
  for (std::size_t i = half; i + half < n; ++i) interior[i] = true;
  out.alpha_dot = convolve_at(log.alpha, filter.first, interior);
  out.alpha_ddot = convolve_at(log.alpha, filter.second, interior);
  out.beta_dot = convolve_at(log.beta, filter.first, interior);
  out.beta_ddot = convolve_at(log.beta, filter.second, interior);
  out.dp_alpha_dot = convolve_at(log.dp_alpha, filter.first, interior);
  out.dp_beta_dot = convolve_at(log.dp_beta, filter.first, interior);
  return out;
}

double FitResult::total_residual() const {
  return std::sqrt(arm_alpha.residual_norm * arm_alpha.residual_norm +
                   arm_beta.residual_norm * arm_beta.residual_norm +
                   pressure_alpha.residual_norm * pressure_alpha.residual_norm +
                   pressure_beta.residual_norm * pressure_beta.residual_norm);
}

FitResult fit_model(const AugmentedLog& arm_data, const AugmentedLog& pressure_data,
                    const FitOptions& options) {
  FitResult out;
  out.arm_alpha = arm_regression(arm_data, false, options, out.warnings);
  out.arm_beta = arm_regression(arm_data, true, options, out.warnings);
  out.pressure_alpha = pressure_regression(pressure_data, false, options, out.warnings);
  out.pressure_beta = pressure_regression(pressure_data, true, options, out.warnings);

  auto fill = [](dynamics::AxisParams& p, const RegressionReport& arm,
                 const RegressionReport& pressure) {
    p.k = -arm.coefficients[0];
    p.d = -arm.coefficients[1];
    p.h = arm.coefficients[2];
    p.tau = 1.0 / pressure.coefficients[0];
    p.c = pressure.coefficients[1];
  };
  fill(out.params.alpha, out.arm_alpha, out.pressure_alpha);
  fill(out.params.beta, out.arm_beta, out.pressure_beta);
  return out;
}

FitResult fit_model(const AugmentedLog& data, const FitOptions& options) {
  return fit_model(data, data, options);
}

}  // namespace softarm::sysid
