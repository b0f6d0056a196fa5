#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace softarm::cli {

/// Exit codes of the command-line front end.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;      // acceptance failure or too many solver failures
inline constexpr int kUsageError = 2;   // bad flags, unknown subcommand
inline constexpr int kConfigError = 3;  // unreadable or invalid scenario, output dir refused

/// Fraction of fail-safe MPC steps above which a run counts as failed.
inline constexpr double kMaxFailSafeFraction = 0.01;

/// Runs the tool on `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace softarm::cli
