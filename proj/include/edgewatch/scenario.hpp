#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgewatch/config.hpp"
#include "edgewatch/system.hpp"

namespace edgewatch {

/// Fixed start of virtual time for every scenario: 2026-01-01T00:00:00Z.
inline constexpr TimePoint kScenarioEpoch{Millis{1'767'225'600'000}};

struct Injection {
  Millis at{0};
  std::string text;
};

/// `lhs op rhs` where each side is a sum of metric names and numbers, e.g.
/// `reports.consumed == reports.timeout + reports.dropped`.
struct Assertion {
  enum class Op { kEq, kNe, kLt, kLe, kGt, kGe };
  using Sum = std::vector<std::string>;

  std::string text;
  Sum lhs;
  Op op = Op::kEq;
  Sum rhs;

  /// Throws ScenarioError on malformed text.
  static Assertion parse(std::string_view text);
};

struct AssertionResult {
  std::string text;
  bool passed = false;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Set when a referenced metric does not exist.
  std::string error;
};

struct Scenario {
  std::string name;
  RunConfig config;
  /// Exactly one of these bounds the run.
  std::optional<std::int64_t> frames;
  std::optional<double> duration_s;
  std::vector<Injection> injections;
  std::vector<Assertion> assertions;

  std::int64_t frame_count() const;
  Millis duration() const;
};

/// Scenario files are run configs plus `scenario.*`, `inject.<n>.*` and
/// `expect.<n>` keys. Channel and LLM default to the mocks and must stay
/// mocked. Throws ParseError, ValidationError or ScenarioError.
Scenario parse_scenario(std::string_view text, const std::filesystem::path &base_dir = ".");
Scenario load_scenario(const std::filesystem::path &path);

struct ScenarioHooks {
  /// Runs after bootstrap, before the first frame.
  std::function<void(System &)> on_bootstrap;
  /// Runs after metrics are finalized.
  std::function<void(System &)> on_finish;
};

struct ScenarioResult {
  std::string name;
  std::string metrics;
  std::map<std::string, std::string> summary;
  std::vector<AssertionResult> assertions;
  std::vector<ChannelMessage> posted;

  bool passed() const;
};

/// Evaluates one assertion against a metrics summary.
AssertionResult evaluate(const Assertion &assertion, const std::map<std::string, std::string> &summary);

/// Discrete-event run on a simulated clock: frames at the configured rate,
/// scripted operator messages at their times, and LLM completions at
/// start + elapsed. Writes metrics to config.metrics_out when set.
ScenarioResult run_scenario(const Scenario &scenario, const ScenarioHooks &hooks = {});

}  // namespace edgewatch
