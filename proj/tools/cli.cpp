#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "softarm/config.hpp"
#include "softarm/sim.hpp"
#include "softarm/sysid.hpp"
#include "softarm/verify.hpp"

namespace softarm::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::optional<unsigned long long> seed;
  std::optional<std::string> mode;
  int throws = 20;
  bool force = false;
};

// Raised for problems the user has to fix before anything runs.
class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void configure_logging() {
  const char* env = std::getenv("SOFTARM_LOG");
  const auto level = env ? spdlog::level::from_str(env) : spdlog::level::warn;
  spdlog::set_level(level);
}

sim::Scenario load_scenario(const Options& o) {
  sim::Scenario s = o.scenario.empty() ? sim::Scenario::defaults()
                                       : sim::Scenario::load(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (o.mode) s.mpc.mode = mpc::parse_mode(*o.mode);
  s.validate();
  return s;
}

// Empty optional when no output was requested.
std::optional<fs::path> prepare_output(const Options& o) {
  if (o.out.empty()) return std::nullopt;
  const fs::path dir(o.out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw CliError(fmt::format("{} is not a directory", o.out));
    if (!fs::is_empty(dir) && !o.force) {
      throw CliError(fmt::format("output directory {} is not empty (use --force)", o.out));
    }
  }
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError(fmt::format("cannot write {}", path.string()));
  f << text;
}

bool too_many_failures(const sim::SolverStats& s, std::ostream& err) {
  if (s.solves == 0) return false;
  const double frac = static_cast<double>(s.failures) / s.solves;
  if (frac <= kMaxFailSafeFraction) return false;
  err << fmt::format("error: {} of {} MPC solves fell back to the previous input ({:.1f}%)\n",
                     s.failures, s.solves, 100.0 * frac);
  return true;
}

std::string run_stem(const sim::Scenario& s) {
  return fmt::format("{}_{}", s.name, mpc::to_string(s.mpc.mode));
}

void print_tracking(const sim::RunMetrics& m, std::ostream& out) {
  out << fmt::format("{} [{}] seed {}: RMSE alpha {:.4f} deg, beta {:.4f} deg; offset "
                     "alpha {:.4f} deg, beta {:.4f} deg; {} solves, {:.2f} iterations/solve\n",
                     m.name, mpc::to_string(m.mode), m.seed, rad2deg(m.rmse_alpha),
                     rad2deg(m.rmse_beta), rad2deg(m.offset_alpha), rad2deg(m.offset_beta),
                     m.solver.solves, m.solver.mean_iterations());
}

int cmd_track(const Options& o, std::ostream& out, std::ostream& err) {
  const auto s = load_scenario(o);
  const auto dir = prepare_output(o);
  const auto run = sim::run_tracking(s);
  print_tracking(run.metrics, out);
  if (dir) {
    const std::string stem = run_stem(s);
    write_file(*dir / (stem + ".csv"), run.log.to_csv());
    write_file(*dir / (stem + ".gp"), sim::gnuplot_script(stem + ".csv", stem));
    write_file(*dir / "metrics.csv", sim::metrics_csv({run.metrics}));
    out << fmt::format("wrote {}\n", dir->string());
  }
  return too_many_failures(run.metrics.solver, err) ? kFailure : kOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  auto s = load_scenario(o);
  const auto dir = prepare_output(o);
  s.mpc.mode = mpc::Mode::kOffsetFree;
  const auto free = sim::run_tracking(s);
  s.mpc.mode = mpc::Mode::kStandard;
  const auto standard = sim::run_tracking(s);
  print_tracking(free.metrics, out);
  print_tracking(standard.metrics, out);
  const double ratio = standard.metrics.rmse_mean() > 0.0
                           ? free.metrics.rmse_mean() / standard.metrics.rmse_mean()
                           : std::numeric_limits<double>::quiet_NaN();
  out << fmt::format("RMSE ratio offset_free/standard: {:.4f}\n", ratio);
  if (dir) {
    for (const auto* run : {&free, &standard}) {
      const std::string stem = fmt::format("{}_{}", s.name, mpc::to_string(run->metrics.mode));
      write_file(*dir / (stem + ".csv"), run->log.to_csv());
      write_file(*dir / (stem + ".gp"), sim::gnuplot_script(stem + ".csv", stem));
    }
    write_file(*dir / "metrics.csv", sim::metrics_csv({free.metrics, standard.metrics}));
    out << fmt::format("wrote {}\n", dir->string());
  }
  const bool failed = too_many_failures(free.metrics.solver, err) ||
                      too_many_failures(standard.metrics.solver, err);
  return failed ? kFailure : kOk;
}

std::string predictions_csv(const sim::CatchRun& run) {
  std::string s = "t,alpha_pred,beta_pred,time_to_intercept,valid,x_est,y_est,z_est\n";
  for (const auto& p : run.predictions) {
    s += fmt::format("{},{},{},{},{},{},{},{}\n", p.t, p.prediction.alpha, p.prediction.beta,
                     p.prediction.time_to_intercept, p.prediction.valid ? 1 : 0,
                     p.estimated_position.x(), p.estimated_position.y(),
                     p.estimated_position.z());
  }
  return s;
}

int cmd_catch(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.throws < 1) throw CliError("--throws must be at least 1");
  auto s = load_scenario(o);
  s.reference.kind = sim::ReferenceKind::kBallCatch;
  const auto dir = prepare_output(o);
  const auto batch = sim::run_catch_batch(s, o.throws);
  out << fmt::format(
      "{} [{}] seed {}: {} throws drawn, {} intercepting, {} caught ({:.1f}%), mean miss "
      "{:.2f} mm\n",
      s.name, mpc::to_string(s.mpc.mode), s.seed, batch.attempted, batch.intercepting,
      batch.caught, 100.0 * batch.success_rate(), 1e3 * batch.mean_miss);
  if (dir) {
    write_file(*dir / "metrics.csv", sim::metrics_csv(batch.runs));
    // Full trace of the first throw for plotting.
    const auto first = sim::run_catch(s, 0);
    const std::string stem = run_stem(s) + "_throw0";
    write_file(*dir / (stem + ".csv"), first.log.to_csv());
    write_file(*dir / (stem + "_predictions.csv"), predictions_csv(first));
    write_file(*dir / (stem + ".gp"), sim::gnuplot_script(stem + ".csv", stem));
    out << fmt::format("wrote {}\n", dir->string());
  }
  return too_many_failures(batch.solver, err) ? kFailure : kOk;
}

std::string report_line(const sysid::RegressionReport& r) {
  std::string coeffs;
  for (double c : r.coefficients) coeffs += fmt::format(" {:.6g}", c);
  return fmt::format("{}:{} (rms residual {:.3g}, condition {:.3g}, {} samples)\n", r.name,
                     coeffs, r.residual_norm, r.condition, r.samples);
}

int cmd_sysid(const Options& o, std::ostream& out, std::ostream&) {
  const auto s = load_scenario(o);
  const auto dir = prepare_output(o);
  const sysid::ExcitationConfig ex;
  const auto sweep = sysid::record_experiment(
      sysid::generate_excitation(sysid::ExcitationKind::kSinusoidSweep, ex), s.plant, s.seed);
  const auto steps = sysid::record_experiment(
      sysid::generate_excitation(sysid::ExcitationKind::kSteps, ex), s.plant, s.seed + 1);
  const auto fit = sysid::fit_model(sysid::differentiate(sweep), sysid::differentiate(steps));
  for (const auto* r : {&fit.arm_alpha, &fit.arm_beta, &fit.pressure_alpha, &fit.pressure_beta}) {
    out << report_line(*r);
  }
  const auto& p = fit.params;
  for (const auto& [name, a] : {std::pair{"alpha", p.alpha}, std::pair{"beta", p.beta}}) {
    out << fmt::format("{}: k {:.4f}, d {:.4f}, h {:.4f}, tau {:.5f}, c {:.5f}\n", name, a.k,
                       a.d, a.h, a.tau, a.c);
  }
  for (const auto& w : fit.warnings) out << "warning: " << w << '\n';
  if (dir) {
    write_file(*dir / "sweep.csv", sweep.to_csv());
    write_file(*dir / "steps.csv", steps.to_csv());
    KeyValueConfig cfg;
    p.to_config(cfg, "model.");
    write_file(*dir / "identified.cfg", cfg.to_string());
    out << fmt::format("wrote {}\n", dir->string());
  }
  return kOk;
}

int cmd_suite(const Options& o, std::ostream& out, std::ostream&) {
  verify::AcceptanceOptions opts;
  opts.base = load_scenario(o);
  if (o.throws > 0) opts.throws = o.throws;
  const auto dir = prepare_output(o);
  const auto results = verify::run_acceptance(opts);
  bool ok = true;
  std::string table;
  for (const auto& r : results) {
    const std::string line = verify::format_result(r);
    out << line << '\n';
    table += line + '\n';
    ok = ok && r.check.passed;
  }
  out << (ok ? "all criteria passed\n" : "acceptance FAILED\n");
  if (dir) write_file(*dir / "acceptance.txt", table);
  return ok ? kOk : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Offset-free MPC of a soft spherical arm: tracking, catching, identification"};
  app.name("softarm");
  app.require_subcommand(1);

  Options o;
  auto add_common = [&o](CLI::App* sub, bool with_mode) {
    sub->add_option("--scenario", o.scenario, "scenario file (key = value lines)");
    sub->add_option("--out", o.out, "output directory for CSV and gnuplot files");
    sub->add_option("--seed", o.seed, "seed override");
    sub->add_flag("--force", o.force, "write into a non-empty output directory");
    if (with_mode) {
      sub->add_option("--mode", o.mode, "controller mode")
          ->check(CLI::IsMember({"offset_free", "standard"}));
    }
  };

  auto* track = app.add_subcommand("track", "closed-loop reference tracking");
  add_common(track, true);
  auto* catcher = app.add_subcommand("catch", "simulated ball-catching batch");
  add_common(catcher, true);
  catcher->add_option("--throws", o.throws, "intercepting throws to run");
  auto* sysid = app.add_subcommand("sysid", "identify the arm model from excitation runs");
  add_common(sysid, false);
  auto* compare = app.add_subcommand("compare", "offset-free vs standard MPC, same seed");
  add_common(compare, false);
  auto* suite = app.add_subcommand("suite", "run every acceptance criterion");
  add_common(suite, false);
  suite->add_option("--throws", o.throws, "intercepting throws for the catch criterion");

  const auto known = [&app](const std::string& name) {
    for (const auto* sub : app.get_subcommands({})) {
      if (sub->check_name(name)) return true;
    }
    return false;
  };
  if (!args.empty() && !args.front().starts_with('-') && !known(args.front())) {
    err << fmt::format("error: unknown subcommand '{}'\n\n", args.front()) << app.help();
    return kUsageError;
  }
  // CLI11 consumes the vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    o.throws = -1;
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }
  if (o.throws < 0) o.throws = app.got_subcommand(suite) ? 0 : 20;

  try {
    if (app.got_subcommand(track)) return cmd_track(o, out, err);
    if (app.got_subcommand(catcher)) return cmd_catch(o, out, err);
    if (app.got_subcommand(sysid)) return cmd_sysid(o, out, err);
    if (app.got_subcommand(compare)) return cmd_compare(o, out, err);
    return cmd_suite(o, out, err);
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "invalid setting: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace softarm::cli
