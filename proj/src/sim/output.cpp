#include <cmath>

#include <fmt/format.h>

#include "softarm/sim.hpp"

namespace softarm::sim {

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  return format_number(v);
}

}  // namespace

std::string RunLog::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += number(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string metrics_csv(const std::vector<RunMetrics>& runs, bool include_timing) {
  std::string out =
      "name,mode,seed,rmse_alpha_deg,rmse_beta_deg,rmse_mean_deg,offset_alpha_deg,"
      "offset_beta_deg,solves,solver_failures,mean_qp_iterations,max_qp_iterations,"
      "intercepting,caught,miss_distance_mm,intercept_time_s,final_prediction_error_mm";
  if (include_timing) out += ",mean_solve_ms,max_solve_ms,over_budget";
  out += '\n';
  for (const auto& m : runs) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", m.name,
                       mpc::to_string(m.mode), m.seed, format_fixed(rad2deg(m.rmse_alpha), 6),
                       format_fixed(rad2deg(m.rmse_beta), 6),
                       format_fixed(rad2deg(m.rmse_mean()), 6),
                       format_fixed(rad2deg(m.offset_alpha), 6),
                       format_fixed(rad2deg(m.offset_beta), 6), m.solver.solves,
                       m.solver.failures, format_fixed(m.solver.mean_iterations(), 3),
                       m.solver.max_iterations, m.intercepting ? 1 : 0, m.caught ? 1 : 0,
                       std::isnan(m.miss_distance) ? "nan" : format_fixed(1e3 * m.miss_distance, 3),
                       std::isnan(m.intercept_time) ? "nan" : format_fixed(m.intercept_time, 4),
                       std::isnan(m.final_prediction_error)
                           ? "nan"
                           : format_fixed(1e3 * m.final_prediction_error, 3));
    if (include_timing) {
      out += fmt::format(",{},{},{}", format_fixed(m.solver.mean_solve_ms, 4),
                         format_fixed(m.solver.max_solve_ms, 4), m.solver.over_budget);
    }
    out += '\n';
  }
  return out;
}

std::string gnuplot_script(const std::string& csv_name, const std::string& title) {
  return fmt::format(
      "# run with gnuplot -p from the directory holding {0}\n"
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set multiplot layout 2,1 title '{1}'\n"
      "set ylabel 'alpha [deg]'\n"
      "plot '{0}' using 1:($2*180/pi) with lines title 'alpha', \\\n"
      "     '{0}' using 1:($4*180/pi) with lines dt 2 title 'alpha ref'\n"
      "set ylabel 'beta [deg]'\n"
      "set xlabel 't [s]'\n"
      "plot '{0}' using 1:($3*180/pi) with lines title 'beta', \\\n"
      "     '{0}' using 1:($5*180/pi) with lines dt 2 title 'beta ref'\n"
      "unset multiplot\n",
      csv_name, title);
}

}  // namespace softarm::sim
