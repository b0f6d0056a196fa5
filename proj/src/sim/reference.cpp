#include <algorithm>
#include <cmath>
#include <numbers>

#include "softarm/sim.hpp"

namespace softarm::sim {

namespace {

double quintic_blend(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

class Sampler {
 public:
  explicit Sampler(std::mt19937_64& rng) : rng_(rng) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

 private:
  std::mt19937_64& rng_;
};

}  // namespace

std::vector<Setpoint> generate_reference(const ReferenceConfig& cfg, int steps,
                                         int preview, double ts, std::mt19937_64& rng) {
  const std::size_t total = static_cast<std::size_t>(std::max(steps + preview, 1));
  std::vector<Setpoint> out;
  out.reserve(total);
  auto time_of = [ts](std::size_t k) { return static_cast<double>(k) * ts; };

  switch (cfg.kind) {
    case ReferenceKind::kBallCatch:
      out.assign(total, Setpoint{});
      return out;
    case ReferenceKind::kStep: {
      const Setpoint target{deg2rad(cfg.step_alpha_deg), deg2rad(cfg.step_beta_deg)};
      for (std::size_t k = 0; k < total; ++k) {
        out.push_back(time_of(k) + 1e-12 >= cfg.step_time ? target : Setpoint{});
      }
      return out;
    }
    default:
      break;
  }

  Sampler draw(rng);
  const double max_mag = deg2rad(cfg.max_magnitude_deg);
  Setpoint current;
  double segment_start = 0.0;
  // Short rest at zero before the first segment.
  const double lead_in = 0.5;
  while (out.size() < total && time_of(out.size()) < lead_in) out.push_back(current);

  while (out.size() < total) {
    segment_start = time_of(out.size());
    if (cfg.kind == ReferenceKind::kSinusoid) {
      const double f = draw.uniform(cfg.min_frequency, cfg.max_frequency);
      const double amp = deg2rad(cfg.sinusoid_amplitude_deg);
      const double amp_a = draw.uniform(0.5 * amp, amp) * (draw.uniform(0, 1) < 0.5 ? -1 : 1);
      const double amp_b = draw.uniform(-amp, amp);
      const double cycles = std::max(1.0, std::round(cfg.sinusoid_segment * f));
      const double length = cycles / f;
      // The segment oscillates around the current point and ends where it began.
      const Setpoint center = current;
      while (out.size() < total) {
        const double tau = time_of(out.size()) - segment_start;
        if (tau >= length) break;
        const double s = std::sin(2.0 * std::numbers::pi * f * tau);
        out.push_back({center.alpha + amp_a * s, center.beta + amp_b * s});
      }
      current = center;
      continue;
    }

    const Setpoint from = current;
    const Setpoint to{draw.uniform(-max_mag, max_mag), draw.uniform(-max_mag, max_mag)};
    double move = 0.0;
    double rate_a = 0.0, rate_b = 0.0;
    if (cfg.kind == ReferenceKind::kRamp) {
      rate_a = deg2rad(draw.uniform(cfg.min_rate_deg, cfg.max_rate_deg));
      rate_b = deg2rad(draw.uniform(cfg.min_rate_deg, cfg.max_rate_deg));
      move = std::max(std::abs(to.alpha - from.alpha) / rate_a,
                      std::abs(to.beta - from.beta) / rate_b);
    } else {
      move = cfg.soft_step_time;
    }
    const double length = move + cfg.hold;
    while (out.size() < total) {
      const double tau = time_of(out.size()) - segment_start;
      if (tau >= length) break;
      Setpoint sp = to;
      if (cfg.kind == ReferenceKind::kRamp) {
        auto ramp = [tau](double a, double b, double rate) {
          const double span = b - a;
          const double reach = std::abs(span) / rate;
          return tau >= reach ? b : a + std::copysign(rate * tau, span);
        };
        sp = {ramp(from.alpha, to.alpha, rate_a), ramp(from.beta, to.beta, rate_b)};
      } else {
        const double w = quintic_blend(tau / cfg.soft_step_time);
        sp = {from.alpha + w * (to.alpha - from.alpha), from.beta + w * (to.beta - from.beta)};
      }
      out.push_back(sp);
    }
    current = to;
  }
  return out;
}

Vector3 wind_gust_profile(const WindGust& gust, double t_since_release) {
  if (gust.magnitude == 0.0 || t_since_release < gust.start ||
      t_since_release >= gust.start + gust.duration) {
    return Vector3::Zero();
  }
  return {gust.magnitude, 0.0, 0.0};
}

}  // namespace softarm::sim
