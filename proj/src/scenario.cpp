#include "edgewatch/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "edgewatch/errors.hpp"

namespace edgewatch {

namespace {

const std::vector<std::pair<std::string_view, Assertion::Op>> &operators() {
  static const std::vector<std::pair<std::string_view, Assertion::Op>> ops{
      {"==", Assertion::Op::kEq}, {"!=", Assertion::Op::kNe}, {"<=", Assertion::Op::kLe},
      {">=", Assertion::Op::kGe}, {"<", Assertion::Op::kLt},  {">", Assertion::Op::kGt},
  };
  return ops;
}

bool metric_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
}

Assertion::Sum parse_sum(std::string_view text, std::string_view whole) {
  Assertion::Sum terms;
  for (const auto &raw : split(text, '+')) {
    auto term = std::string(trim(raw));
    if (term.empty() || !std::all_of(term.begin(), term.end(), metric_name_char)) {
      throw ScenarioError("malformed assertion '" + std::string(whole) + "'");
    }
    terms.push_back(std::move(term));
  }
  return terms;
}

}  // namespace

Assertion Assertion::parse(std::string_view text) {
  auto body = trim(text);
  for (const auto &[token, op] : operators()) {
    auto pos = body.find(token);
    if (pos == std::string_view::npos) continue;
    Assertion a;
    a.text = std::string(body);
    a.op = op;
    a.lhs = parse_sum(body.substr(0, pos), body);
    a.rhs = parse_sum(body.substr(pos + token.size()), body);
    return a;
  }
  throw ScenarioError("assertion '" + std::string(body) + "' has no comparison operator");
}

std::int64_t Scenario::frame_count() const {
  if (frames) return *frames;
  return static_cast<std::int64_t>(std::floor(duration_s.value_or(0.0) * config.vision.frame_rate + 1e-9));
}

Millis Scenario::duration() const {
  if (duration_s) return Millis{std::llround(*duration_s * 1000.0)};
  return Millis{std::llround(static_cast<double>(frame_count()) * 1000.0 / config.vision.frame_rate)};
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path &base_dir) {
  auto flat = FlatConfig::parse(text);

  RunConfig defaults;
  defaults.channel.kind = ChannelKind::kMock;
  defaults.channel.channel_id = "scenario";
  defaults.reporting.llm = LlmKind::kMock;
  defaults.seed = 0;
  // Placeholder so validation passes; replaced below once the name is known.
  defaults.vision.snapshot_dir = "scenario-out";

  auto extra = [](std::string_view key) {
    return key.starts_with("scenario.") || key.starts_with("inject.") || key.starts_with("expect.");
  };
  Scenario scenario;
  scenario.config = config_from_entries(flat, base_dir, extra, defaults);

  std::map<long long, Injection> injections;
  std::map<long long, std::pair<bool, bool>> seen;  // at_s, text
  std::map<long long, Assertion> assertions;
  bool snapshot_dir_set = false;

  auto index_of = [](const FlatConfig::Entry &e, std::string_view segment) {
    auto v = parse_int(segment);
    if (!v || *v < 0) throw ScenarioError("line " + std::to_string(e.line) + ": bad index in '" + e.key + "'");
    return *v;
  };

  for (const auto &e : flat.entries()) {
    if (e.key == "run.snapshot_dir") snapshot_dir_set = true;
    if (!extra(e.key)) continue;
    auto parts = split(e.key, '.');
    const auto where = "line " + std::to_string(e.line) + ": ";
    if (parts[0] == "scenario") {
      if (parts.size() != 2) throw ScenarioError(where + "unknown key '" + e.key + "'");
      if (parts[1] == "name") {
        scenario.name = e.value;
      } else if (parts[1] == "duration_s") {
        auto v = parse_double(e.value);
        if (!v || !(*v > 0.0) || !std::isfinite(*v)) throw ScenarioError(where + "duration_s must be a positive number");
        scenario.duration_s = *v;
      } else if (parts[1] == "frames") {
        auto v = parse_int(e.value);
        if (!v || *v <= 0) throw ScenarioError(where + "frames must be a positive integer");
        scenario.frames = *v;
      } else {
        throw ScenarioError(where + "unknown key '" + e.key + "'");
      }
    } else if (parts[0] == "inject") {
      if (parts.size() != 3) throw ScenarioError(where + "expected inject.<n>.at_s or inject.<n>.text");
      const auto n = index_of(e, parts[1]);
      if (parts[2] == "at_s") {
        auto v = parse_double(e.value);
        if (!v || *v < 0.0) throw ScenarioError(where + "at_s must be a non-negative number");
        injections[n].at = Millis{std::llround(*v * 1000.0)};
        seen[n].first = true;
      } else if (parts[2] == "text") {
        injections[n].text = e.value;
        seen[n].second = true;
      } else {
        throw ScenarioError(where + "unknown key '" + e.key + "'");
      }
    } else {
      if (parts.size() != 2) throw ScenarioError(where + "expected expect.<n>");
      assertions.emplace(index_of(e, parts[1]), Assertion::parse(e.value));
    }
  }

  if (scenario.name.empty()) throw ScenarioError("scenario.name is required");
  if (scenario.frames.has_value() == scenario.duration_s.has_value()) {
    throw ScenarioError("exactly one of scenario.frames and scenario.duration_s is required");
  }
  for (const auto &[n, flags] : seen) {
    if (!flags.first || !flags.second) {
      throw ScenarioError("inject." + std::to_string(n) + " needs both at_s and text");
    }
  }
  if (scenario.config.channel.kind != ChannelKind::kMock) {
    throw ScenarioError("scenarios use the mock channel; remove channel.kind");
  }
  if (scenario.config.reporting.llm != LlmKind::kMock) {
    throw ScenarioError("scenarios run offline; reporting.llm must be mock");
  }
  if (scenario.config.backend.kind == BackendKind::kExternal) {
    throw ScenarioError("scenarios need a replay or synthetic backend");
  }
  if (!snapshot_dir_set) scenario.config.vision.snapshot_dir = std::filesystem::path("scenario-out") / scenario.name;

  const auto duration = scenario.duration();
  for (auto &[n, injection] : injections) {
    if (injection.at > duration) {
      throw ScenarioError("inject." + std::to_string(n) + " is scheduled after the end of the scenario");
    }
    scenario.injections.push_back(std::move(injection));
  }
  std::stable_sort(scenario.injections.begin(), scenario.injections.end(),
                   [](const Injection &a, const Injection &b) { return a.at < b.at; });
  for (auto &[n, assertion] : assertions) scenario.assertions.push_back(std::move(assertion));
  return scenario;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.parent_path());
}

bool ScenarioResult::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const auto &a) { return a.passed; });
}

AssertionResult evaluate(const Assertion &assertion, const std::map<std::string, std::string> &summary) {
  AssertionResult result;
  result.text = assertion.text;
  auto sum = [&](const Assertion::Sum &terms) {
    double total = 0.0;
    for (const auto &term : terms) {
      if (auto literal = parse_double(term)) {
        total += *literal;
        continue;
      }
      auto it = summary.find(term);
      if (it == summary.end()) {
        if (result.error.empty()) result.error = "no metric named '" + term + "'";
        continue;
      }
      total += parse_double(it->second).value_or(0.0);
    }
    return total;
  };
  result.lhs = sum(assertion.lhs);
  result.rhs = sum(assertion.rhs);
  if (!result.error.empty()) return result;
  switch (assertion.op) {
    case Assertion::Op::kEq:
      result.passed = result.lhs == result.rhs;
      break;
    case Assertion::Op::kNe:
      result.passed = result.lhs != result.rhs;
      break;
    case Assertion::Op::kLt:
      result.passed = result.lhs < result.rhs;
      break;
    case Assertion::Op::kLe:
      result.passed = result.lhs <= result.rhs;
      break;
    case Assertion::Op::kGt:
      result.passed = result.lhs > result.rhs;
      break;
    case Assertion::Op::kGe:
      result.passed = result.lhs >= result.rhs;
      break;
  }
  return result;
}

namespace {

struct Completion {
  ReportJob job;
  CaptionResult result;
};

}  // namespace

ScenarioResult run_scenario(const Scenario &scenario, const ScenarioHooks &hooks) {
  SimulatedClock clock(kScenarioEpoch);
  auto owned_adapter = std::make_unique<MockAdapter>();
  auto *adapter = owned_adapter.get();
  SystemParts parts;
  parts.adapter = std::move(owned_adapter);
  System system(scenario.config, clock, std::move(parts));
  if (hooks.on_bootstrap) hooks.on_bootstrap(system);

  auto &router = system.router();
  auto *reporting = system.reporting();
  // Keyed by (completion time, start order) so equal times resolve FIFO.
  std::map<std::pair<TimePoint, std::uint64_t>, Completion> completions;
  std::uint64_t started = 0;

  auto begin_jobs = [&] {
    if (reporting == nullptr) return;
    while (auto job = reporting->try_begin()) {
      auto result = reporting->execute(*job);
      completions.emplace(std::pair{clock.now() + result.elapsed, started++},
                          Completion{std::move(*job), std::move(result)});
    }
  };
  auto complete_next = [&] {
    auto node = completions.extract(completions.begin());
    clock.advance_to(node.key().first);
    reporting->complete(node.mapped().job, node.mapped().result);
    router.dispatch_pending();
  };

  router.dispatch_pending();
  const auto frames = scenario.frame_count();
  const double period_ms = 1000.0 / scenario.config.vision.frame_rate;
  auto frame_time = [&](std::int64_t k) {
    return kScenarioEpoch + Millis{std::llround(static_cast<double>(k) * period_ms)};
  };

  std::int64_t next_frame = 0;
  std::size_t next_injection = 0;
  for (;;) {
    std::optional<TimePoint> t_frame;
    if (next_frame < frames) t_frame = frame_time(next_frame);
    std::optional<TimePoint> t_inject;
    if (next_injection < scenario.injections.size()) {
      t_inject = kScenarioEpoch + scenario.injections[next_injection].at;
    }
    std::optional<TimePoint> t_done;
    if (!completions.empty()) t_done = completions.begin()->first.first;

    // On ties: finish LLM work, then operator input, then the next frame.
    if (t_done && (!t_inject || *t_done <= *t_inject) && (!t_frame || *t_done <= *t_frame) &&
        *t_done <= kScenarioEpoch + scenario.duration()) {
      complete_next();
    } else if (t_inject && (!t_frame || *t_inject <= *t_frame)) {
      clock.advance_to(*t_inject);
      adapter->inject_text(scenario.injections[next_injection++].text, clock.now());
      router.dispatch_pending();
    } else if (t_frame) {
      clock.advance_to(*t_frame);
      system.vision().tick(system.vision().make_frame(next_frame++, *t_frame));
      router.dispatch_pending();
    } else {
      break;
    }
    begin_jobs();
  }

  // Shutdown in harness order: announce, stop vision, let in-flight LLM work
  // finish (each job is bounded by the deadline), drop the backlog.
  clock.advance_to(std::max(clock.now(), kScenarioEpoch + scenario.duration()));
  system.publish_shutdown();
  router.dispatch_pending();
  system.vision().stop();
  while (!completions.empty()) complete_next();
  system.shutdown();

  system.finalize_metrics();
  system.flush_metrics();
  if (hooks.on_finish) hooks.on_finish(system);

  ScenarioResult result;
  result.name = scenario.name;
  result.metrics = system.metrics().to_string();
  result.summary = system.metrics().summary();
  result.posted = adapter->collect();
  for (const auto &assertion : scenario.assertions) result.assertions.push_back(evaluate(assertion, result.summary));
  return result;
}

}  // namespace edgewatch
