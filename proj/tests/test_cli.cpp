#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using softarm::cli::run;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Fresh scratch directory per test.
fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir =
      fs::temp_directory_path() / (std::string("softarm_cli_") + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string scenario(const std::string& name) {
  return (fs::path(SOFTARM_SCENARIO_DIR) / name).string();
}

}  // namespace

TEST(Cli, UnknownSubcommandPrintsUsage) {
  const auto r = invoke({"juggle"});
  EXPECT_EQ(r.code, softarm::cli::kUsageError);
  EXPECT_NE(r.err.find("unknown subcommand 'juggle'"), std::string::npos);
  EXPECT_NE(r.err.find("Usage:"), std::string::npos);
}

TEST(Cli, MissingSubcommandPrintsUsage) {
  const auto r = invoke({});
  EXPECT_EQ(r.code, softarm::cli::kUsageError);
  EXPECT_NE(r.err.find("Usage:"), std::string::npos);
}

TEST(Cli, BadModeIsAUsageError) {
  EXPECT_EQ(invoke({"track", "--mode", "adaptive"}).code, softarm::cli::kUsageError);
}

TEST(Cli, MissingScenarioFile) {
  const auto r = invoke({"track", "--scenario", "/nonexistent/s.cfg"});
  EXPECT_EQ(r.code, softarm::cli::kConfigError);
  EXPECT_NE(r.err.find("/nonexistent/s.cfg"), std::string::npos);
}

TEST(Cli, MalformedScenarioReportsTheLine) {
  const auto dir = scratch();
  const auto cfg = dir / "bad.cfg";
  std::ofstream(cfg) << "# comment\nscenario.name = bad\nthis line has no equals\n";
  const auto r = invoke({"track", "--scenario", cfg.string()});
  EXPECT_EQ(r.code, softarm::cli::kConfigError);
  EXPECT_NE(r.err.find("bad.cfg:3"), std::string::npos) << r.err;
}

TEST(Cli, TrackWritesCsvPlotAndMetrics) {
  const auto dir = scratch() / "runs";
  const auto r = invoke({"track", "--scenario", scenario("step.cfg"), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("RMSE"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "step_offset_free.csv"));
  EXPECT_TRUE(fs::exists(dir / "step_offset_free.gp"));
  const auto metrics = slurp(dir / "metrics.csv");
  EXPECT_EQ(metrics.rfind("name,mode,seed", 0), 0u);
  EXPECT_NE(metrics.find("step,offset_free,1,"), std::string::npos);
}

TEST(Cli, RefusesNonEmptyOutputWithoutForce) {
  const auto dir = scratch() / "runs";
  const std::vector<std::string> args{"track", "--scenario", scenario("step.cfg"), "--out",
                                      dir.string()};
  ASSERT_EQ(invoke(args).code, 0);
  const auto before = slurp(dir / "step_offset_free.csv");
  const auto refused = invoke(args);
  EXPECT_EQ(refused.code, softarm::cli::kConfigError);
  EXPECT_NE(refused.err.find("--force"), std::string::npos);

  auto forced = args;
  forced.push_back("--force");
  forced.push_back("--mode");
  forced.push_back("standard");
  ASSERT_EQ(invoke(forced).code, 0);
  EXPECT_TRUE(fs::exists(dir / "step_standard.csv"));
  EXPECT_EQ(slurp(dir / "step_offset_free.csv"), before);
}

TEST(Cli, OutputIsReproducibleAndSeeded) {
  const auto root = scratch();
  auto track = [&](const std::string& sub, const std::string& seed) {
    const auto dir = root / sub;
    const auto r = invoke({"track", "--scenario", scenario("ramp.cfg"), "--seed", seed, "--out",
                           dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return slurp(dir / "ramp_offset_free.csv");
  };
  const auto a = track("a", "5");
  EXPECT_EQ(a, track("b", "5"));
  EXPECT_NE(a, track("c", "6"));
}

TEST(Cli, ComparePrintsTheRmseRatio) {
  const auto r = invoke({"compare", "--scenario", scenario("soft_step.cfg")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("[offset_free]"), std::string::npos);
  EXPECT_NE(r.out.find("[standard]"), std::string::npos);
  EXPECT_NE(r.out.find("RMSE ratio offset_free/standard: "), std::string::npos);
}

TEST(Cli, CatchRunsTheRequestedThrows) {
  const auto dir = scratch() / "catch";
  const auto r = invoke({"catch", "--throws", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2 intercepting"), std::string::npos) << r.out;
  std::ifstream metrics(dir / "metrics.csv");
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) ++lines;
  EXPECT_EQ(lines, 3);
  EXPECT_TRUE(fs::exists(dir / "scenario_offset_free_throw0_predictions.csv"));
  EXPECT_EQ(invoke({"catch", "--throws", "0"}).code, softarm::cli::kConfigError);
}

TEST(Cli, SysidWritesAnIdentifiedModel) {
  const auto dir = scratch() / "id";
  const auto r = invoke({"sysid", "--scenario", scenario("linear.cfg"), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = slurp(dir / "identified.cfg");
  EXPECT_NE(cfg.find("model.k_alpha = "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "steps.csv"));
}
