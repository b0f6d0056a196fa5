#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "softarm/config.hpp"
#include "softarm/sim.hpp"

using namespace softarm;

TEST(KeyValueConfig, ParsesCommentsAndWhitespace) {
  const auto cfg = KeyValueConfig::parse(
      "# model\n"
      "\n"
      "  k_alpha = 230  \n"
      "mpc.q = 100, 1, 0.1\n"
      "name=step run\n");
  EXPECT_DOUBLE_EQ(cfg.get_double("k_alpha", 0.0), 230.0);
  EXPECT_EQ(cfg.get_doubles("mpc.q", {}), (std::vector<double>{100.0, 1.0, 0.1}));
  EXPECT_EQ(cfg.get_string("name", ""), "step run");
  EXPECT_DOUBLE_EQ(cfg.get_double("missing", 7.0), 7.0);
}

TEST(KeyValueConfig, MalformedLineReportsLineNumber) {
  try {
    KeyValueConfig::parse("a = 1\n# fine\nthis line is bad\n", "s.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("s.cfg:3"), std::string::npos) << e.what();
  }
}

TEST(KeyValueConfig, BadNumberNamesKeyAndLine) {
  const auto cfg = KeyValueConfig::parse("x = 1\ny = abc\n", "t.cfg");
  try {
    cfg.get_double("y", 0.0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("t.cfg:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
  }
  EXPECT_THROW(cfg.get_int("y", 0), ConfigError);
  EXPECT_THROW(cfg.get_bool("y", false), ConfigError);
}

TEST(KeyValueConfig, MissingFile) {
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/dir/none.cfg"), ConfigError);
}

TEST(KeyValueConfig, NumbersRoundTripThroughText) {
  KeyValueConfig cfg;
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 4.1887902047863905}) {
    cfg.set("v", v);
    const auto back = KeyValueConfig::parse(cfg.to_string());
    EXPECT_EQ(back.get_double("v", 0.0), v);
  }
}

TEST(Formatting, LocaleIndependent) {
  EXPECT_EQ(format_fixed(1234.5678, 2), "1234.57");
  EXPECT_EQ(format_fixed(-0.5, 3), "-0.500");
  EXPECT_EQ(format_number(0.25), "0.25");
}

TEST(ScenarioConfig, DefaultsRoundTrip) {
  const auto s = sim::Scenario::defaults();
  const auto cfg = s.to_config();
  const auto back = sim::Scenario::from_config(KeyValueConfig::parse(cfg.to_string()));
  EXPECT_EQ(back.to_config().to_string(), cfg.to_string());
  EXPECT_DOUBLE_EQ(back.plant.relaxation_amplitude, s.plant.relaxation_amplitude);
  EXPECT_DOUBLE_EQ(back.kf.q_proc(kNumStates, kNumStates), s.kf.q_proc(kNumStates, kNumStates));
}

TEST(ScenarioConfig, OverlaysOnDefaults) {
  const auto s = sim::Scenario::from_config(KeyValueConfig::parse(
      "scenario.name = gusty\n"
      "reference.kind = ball_catch\n"
      "mpc.mode = standard\n"
      "plant.relaxation_amplitude = 10\n"
      "wind.magnitude = 0.5\n"));
  const auto d = sim::Scenario::defaults();
  EXPECT_EQ(s.name, "gusty");
  EXPECT_EQ(s.reference.kind, sim::ReferenceKind::kBallCatch);
  EXPECT_EQ(s.mpc.mode, mpc::Mode::kStandard);
  EXPECT_DOUBLE_EQ(s.plant.relaxation_amplitude, 10.0);
  // Untouched plant and filter keys keep the scenario defaults.
  EXPECT_DOUBLE_EQ(s.plant.coupling_gain, d.plant.coupling_gain);
  EXPECT_DOUBLE_EQ(s.kf.q_proc(kNumStates, kNumStates), d.kf.q_proc(kNumStates, kNumStates));
  EXPECT_DOUBLE_EQ(s.ball.wind.magnitude, 0.5);
  EXPECT_TRUE(std::isinf(s.ball.wind.duration));
}

TEST(ScenarioConfig, RejectsUnknownAndInvalid) {
  EXPECT_THROW(sim::Scenario::from_config(KeyValueConfig::parse("mpc.horizn = 5\n")),
               ConfigError);
  EXPECT_THROW(sim::Scenario::from_config(KeyValueConfig::parse("scenario.duration = -1\n")),
               ConfigError);
  EXPECT_THROW(sim::Scenario::from_config(KeyValueConfig::parse("reference.kind = zigzag\n")),
               std::exception);
  EXPECT_THROW(sim::Scenario::from_config(KeyValueConfig::parse("model.tau_alpha = 0\n")),
               std::exception);
}

TEST(ScenarioConfig, ShippedScenariosLoad) {
  const std::filesystem::path dir = SOFTARM_SCENARIO_DIR;
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(sim::Scenario::load(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 5);
}
