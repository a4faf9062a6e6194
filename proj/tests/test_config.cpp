#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "edgewatch/config.hpp"
#include "edgewatch/errors.hpp"
#include "edgewatch/scenario.hpp"

using namespace edgewatch;
namespace fs = std::filesystem;

namespace {

// The synthetic backend is the default and needs at least one object.
const std::string kObject =
    "synthetic.object.p.label = person\n"
    "synthetic.object.p.start = 0\n"
    "synthetic.object.p.end = 10\n"
    "synthetic.object.p.box = 0,0,10,10\n";

RunConfig parse(const std::string &text) { return config_from_entries(FlatConfig::parse(kObject + text), "."); }

std::string field_of(const std::string &text) {
  try {
    parse(text);
  } catch (const ValidationError &e) {
    return e.field();
  }
  return "";
}

std::string scenario_error(const std::string &text) {
  try {
    parse_scenario(text.find("synthetic.") == std::string::npos ? kObject + text : text);
  } catch (const ScenarioError &e) {
    return e.what();
  }
  return "";
}

const std::string kMinimalScenario =
    kObject +
    "scenario.name = t\n"
    "scenario.frames = 10\n";

}  // namespace

TEST(FlatConfig, ParsesCommentsAndTrims) {
  auto cfg = FlatConfig::parse("# c\n  a.b =  x y  \n\nc = 1\n");
  ASSERT_EQ(cfg.entries().size(), 2u);
  EXPECT_EQ(cfg.find("a.b")->value, "x y");
  EXPECT_EQ(cfg.find("c")->line, 4u);
  EXPECT_FALSE(cfg.contains("d"));
}

TEST(FlatConfig, RejectsMalformedLinesWithLineNumbers) {
  try {
    FlatConfig::parse("a = 1\nno equals here\n");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(FlatConfig::parse("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(FlatConfig::parse(" = 2\n"), ParseError);
}

TEST(FlatConfig, StrictScalars) {
  EXPECT_EQ(parse_double("0.5"), 0.5);
  EXPECT_FALSE(parse_double("0.5x"));
  EXPECT_FALSE(parse_double(""));
  EXPECT_EQ(parse_int("-3"), -3);
  EXPECT_FALSE(parse_int("3.0"));
  EXPECT_EQ(parse_bool("on"), true);
  EXPECT_EQ(parse_bool("false"), false);
  EXPECT_FALSE(parse_bool("maybe"));
}

TEST(RunConfig, Defaults) {
  ::unsetenv("LLM_BASE_URL");
  auto c = parse("");
  EXPECT_EQ(c.backend.kind, BackendKind::kSynthetic);
  EXPECT_DOUBLE_EQ(c.vision.tracker.theta, 0.3);
  EXPECT_EQ(c.vision.tracker.l_max, 10);
  EXPECT_EQ(c.reporting.llm, LlmKind::kOllama);
  EXPECT_EQ(c.reporting.base_url, "http://127.0.0.1:11434");
  EXPECT_EQ(c.reporting.options.deadline, Millis{60'000});
  EXPECT_EQ(c.reporting.options.queue_cap, 4u);
  EXPECT_EQ(c.reporting.options.max_in_flight, 1u);
  EXPECT_EQ(c.channel.kind, ChannelKind::kConsole);
  EXPECT_FALSE(c.autostart);
}

TEST(RunConfig, InvalidValuesNameTheField) {
  EXPECT_EQ(field_of("tracker.theta = 1.5\n"), "tracker.theta");
  EXPECT_EQ(field_of("tracker.theta = zero\n"), "tracker.theta");
  EXPECT_EQ(field_of("tracker.l_max = 0\n"), "tracker.l_max");
  EXPECT_EQ(field_of("vision.resolution = 640\n"), "vision.resolution");
  EXPECT_EQ(field_of("vision.frame_rate = -1\n"), "vision.frame_rate");
  EXPECT_EQ(field_of("reporting.queue_cap = 0\n"), "reporting.queue_cap");
  EXPECT_EQ(field_of("channel.kind = irc\n"), "channel.kind");
  EXPECT_EQ(field_of("camera.fps = 3\n"), "camera.fps");
  EXPECT_EQ(field_of("backend.kind = replay\n"), "backend.path");
}

TEST(RunConfig, DirectPostRequiresReportingDisabled) {
  EXPECT_FALSE(field_of("vision.direct_post = true\n").empty());
  EXPECT_NO_THROW(parse("vision.direct_post = true\nreporting.enabled = false\n"));
}

TEST(RunConfig, EnvironmentOverridesBaseUrl) {
  ::setenv("LLM_BASE_URL", "http://gpu-box:11434", 1);
  auto c = parse("reporting.base_url = http://other:1\n");
  ::unsetenv("LLM_BASE_URL");
  EXPECT_EQ(c.reporting.base_url, "http://gpu-box:11434");
}

TEST(RunConfig, BackendPathIsRelativeToConfigFile) {
  fs::create_directories("config-test/nested");
  std::ofstream("config-test/nested/frames.txt") << "frame=0 ts=0\n";
  std::ofstream("config-test/nested/run.conf") << "backend.kind = replay\nbackend.path = frames.txt\n";
  auto c = load_config("config-test/nested/run.conf");
  EXPECT_EQ(fs::weakly_canonical(c.backend.path), fs::weakly_canonical("config-test/nested/frames.txt"));
  EXPECT_THROW(load_config("config-test/absent.conf"), IoError);
}

TEST(RunConfig, SecretsAreNotConfigKeys) {
  EXPECT_EQ(field_of("channel.bot_token = xoxb-1\n"), "channel.bot_token");
  EXPECT_EQ(field_of("channel.app_token = xapp-1\n"), "channel.app_token");
}

TEST(Scenario, DefaultsToMocksAndNamedOutputDir) {
  auto s = parse_scenario(kMinimalScenario);
  EXPECT_EQ(s.name, "t");
  EXPECT_EQ(s.config.channel.kind, ChannelKind::kMock);
  EXPECT_EQ(s.config.reporting.llm, LlmKind::kMock);
  EXPECT_EQ(s.config.vision.snapshot_dir, fs::path("scenario-out") / "t");
  EXPECT_EQ(s.frame_count(), 10);
  EXPECT_EQ(s.duration(), Millis{1000});
}

TEST(Scenario, DurationBound) {
  auto s = parse_scenario(kObject + "scenario.name = d\nscenario.duration_s = 2.5\nvision.frame_rate = 4\n");
  EXPECT_EQ(s.frame_count(), 10);
  EXPECT_EQ(s.duration(), Millis{2500});
}

TEST(Scenario, Injections) {
  auto s = parse_scenario(kMinimalScenario + "inject.1.at_s = 0.5\ninject.1.text = status\ninject.0.at_s = 0\n"
                                             "inject.0.text = start\n");
  ASSERT_EQ(s.injections.size(), 2u);
  EXPECT_EQ(s.injections[0].text, "start");
  EXPECT_EQ(s.injections[1].at, Millis{500});
}

TEST(Scenario, Errors) {
  EXPECT_NE(scenario_error("scenario.frames = 3\n").find("scenario.name"), std::string::npos);
  EXPECT_NE(scenario_error("scenario.name = x\n").find("exactly one"), std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "scenario.duration_s = 1\n").find("exactly one"), std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "channel.kind = slack\n").find("mock channel"), std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "reporting.llm = ollama\n").find("mock"), std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "inject.0.at_s = 5\ninject.0.text = start\n").find("after the end"),
            std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "inject.0.at_s = 0\n").find("needs both"), std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "expect.0 = a b\n").find("operator"), std::string::npos);
  EXPECT_NE(scenario_error(kMinimalScenario + "scenario.speed = 3\n").find("unknown key"), std::string::npos);
}

TEST(Assertion, ParsesSumsAndOperators) {
  auto a = Assertion::parse(" reports.consumed == reports.timeout + reports.dropped ");
  EXPECT_EQ(a.op, Assertion::Op::kEq);
  EXPECT_EQ(a.lhs, (Assertion::Sum{"reports.consumed"}));
  EXPECT_EQ(a.rhs, (Assertion::Sum{"reports.timeout", "reports.dropped"}));
  EXPECT_EQ(Assertion::parse("a <= 3").op, Assertion::Op::kLe);
  EXPECT_EQ(Assertion::parse("a < 3").op, Assertion::Op::kLt);
  EXPECT_EQ(Assertion::parse("a >= 3").op, Assertion::Op::kGe);
  EXPECT_EQ(Assertion::parse("a > 3").op, Assertion::Op::kGt);
  EXPECT_EQ(Assertion::parse("a != 3").op, Assertion::Op::kNe);
  EXPECT_THROW(Assertion::parse("a == "), ScenarioError);
  EXPECT_THROW(Assertion::parse("a + == 1"), ScenarioError);
}

TEST(Assertion, EvaluatesAgainstSummary) {
  std::map<std::string, std::string> summary{{"x", "3"}, {"y", "4"}, {"fps", "2.500"}};
  EXPECT_TRUE(evaluate(Assertion::parse("x + y == 7"), summary).passed);
  EXPECT_TRUE(evaluate(Assertion::parse("fps > 2.4"), summary).passed);
  EXPECT_FALSE(evaluate(Assertion::parse("x > y"), summary).passed);
  auto missing = evaluate(Assertion::parse("z == 0"), summary);
  EXPECT_FALSE(missing.passed);
  EXPECT_EQ(missing.error, "no metric named 'z'");
}
