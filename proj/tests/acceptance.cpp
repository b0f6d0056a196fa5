#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "softarm/verify.hpp"

// Prints one line per acceptance criterion; the exit code is nonzero when any
// selected criterion fails. Optional arguments pick criteria by number.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  softarm::verify::AcceptanceOptions opts;
  bool ok = true;
  for (const auto& r : softarm::verify::run_acceptance(opts, only)) {
    std::printf("%s\n", softarm::verify::format_result(r).c_str());
    std::fflush(stdout);
    ok = ok && r.check.passed;
  }
  return ok ? 0 : 1;
}
