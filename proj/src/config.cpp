#include "edgewatch/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <map>

#include "edgewatch/errors.hpp"

namespace edgewatch {

std::string_view backend_kind_name(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::kReplay:
      return "replay";
    case BackendKind::kSynthetic:
      return "synthetic";
    case BackendKind::kExternal:
      return "external";
  }
  return "synthetic";
}

std::string_view channel_kind_name(ChannelKind kind) noexcept {
  switch (kind) {
    case ChannelKind::kMock:
      return "mock";
    case ChannelKind::kConsole:
      return "console";
    case ChannelKind::kSlack:
      return "slack";
  }
  return "console";
}

void RunConfig::validate() const {
  vision.tracker.validate();
  if (!(vision.frame_rate > 0.0)) throw ValidationError("vision.frame_rate", "must be > 0");
  if (vision.width <= 0 || vision.height <= 0) throw ValidationError("vision.resolution", "must be positive");
  if (vision.conf_threshold < 0.0 || vision.conf_threshold > 1.0) {
    throw ValidationError("vision.conf", "must be in [0, 1]");
  }
  if (vision.snapshot_dir.empty()) throw ValidationError("run.snapshot_dir", "must not be empty");
  switch (backend.kind) {
    case BackendKind::kReplay:
      if (backend.path.empty()) throw ValidationError("backend.path", "replay backend needs a file");
      break;
    case BackendKind::kSynthetic:
      if (backend.path.empty() && !backend.script) {
        throw ValidationError("backend.path", "synthetic backend needs a script file or synthetic.* keys");
      }
      break;
    case BackendKind::kExternal:
      if (backend.descriptor.empty()) throw ValidationError("backend.descriptor", "must not be empty");
      break;
  }
  if (reporting.enabled) {
    if (reporting.base_url.empty()) throw ValidationError("reporting.base_url", "must not be empty");
    if (reporting.options.model.empty()) throw ValidationError("reporting.model", "must not be empty");
  }
  if (reporting.options.deadline.count() <= 0) throw ValidationError("reporting.deadline_s", "must be > 0");
  if (reporting.options.max_in_flight == 0) throw ValidationError("reporting.max_in_flight", "must be >= 1");
  if (reporting.options.queue_cap == 0) throw ValidationError("reporting.queue_cap", "must be >= 1");
  if (reporting.mock.delay.count() < 0) throw ValidationError("reporting.mock_delay_s", "must be >= 0");
  if (channel.channel_id.empty()) throw ValidationError("channel.channel_id", "must not be empty");
  if (router_queue_cap == 0) throw ValidationError("router.queue_cap", "must be >= 1");
  if (router_mailbox_cap == 0) throw ValidationError("router.mailbox_cap", "must be >= 1");
  if (!(status_interval_s > 0.0)) throw ValidationError("run.status_interval_s", "must be > 0");
  if (direct_post && reporting.enabled) {
    throw ValidationError("vision.direct_post", "only valid with reporting.enabled = false");
  }
}

namespace {

using Entry = FlatConfig::Entry;

double as_double(const Entry &e) {
  auto v = parse_double(e.value);
  if (!v) throw ValidationError(e.key, "expected a number, got '" + e.value + "'");
  return *v;
}

long long as_int(const Entry &e) {
  auto v = parse_int(e.value);
  if (!v) throw ValidationError(e.key, "expected an integer, got '" + e.value + "'");
  return *v;
}

std::size_t as_count(const Entry &e) {
  auto v = as_int(e);
  if (v < 0) throw ValidationError(e.key, "must be >= 0");
  return static_cast<std::size_t>(v);
}

bool as_bool(const Entry &e) {
  auto v = parse_bool(e.value);
  if (!v) throw ValidationError(e.key, "expected a boolean, got '" + e.value + "'");
  return *v;
}

Millis as_seconds(const Entry &e) {
  return Millis{static_cast<Millis::rep>(std::llround(as_double(e) * 1000.0))};
}

std::pair<int, int> as_resolution(const Entry &e) {
  auto parts = split(e.value, 'x');
  if (parts.size() == 2) {
    auto w = parse_int(parts[0]);
    auto h = parse_int(parts[1]);
    if (w && h) return {static_cast<int>(*w), static_cast<int>(*h)};
  }
  throw ValidationError(e.key, "expected WIDTHxHEIGHT, got '" + e.value + "'");
}

std::set<std::string> as_labels(const Entry &e) {
  std::set<std::string> labels;
  for (const auto &part : split(e.value, ',')) {
    auto label = trim(part);
    if (!label.empty() && label != "*") labels.emplace(label);
  }
  return labels;
}

using Setter = std::function<void(RunConfig &, const Entry &)>;

const std::map<std::string, Setter, std::less<>> &setters() {
  static const std::map<std::string, Setter, std::less<>> table{
      {"backend.kind",
       [](RunConfig &c, const Entry &e) {
         if (e.value == "replay") {
           c.backend.kind = BackendKind::kReplay;
         } else if (e.value == "synthetic") {
           c.backend.kind = BackendKind::kSynthetic;
         } else if (e.value == "external") {
           c.backend.kind = BackendKind::kExternal;
         } else {
           throw ValidationError(e.key, "expected replay, synthetic or external");
         }
       }},
      {"backend.path", [](RunConfig &c, const Entry &e) { c.backend.path = e.value; }},
      {"backend.descriptor", [](RunConfig &c, const Entry &e) { c.backend.descriptor = e.value; }},
      {"vision.frame_rate", [](RunConfig &c, const Entry &e) { c.vision.frame_rate = as_double(e); }},
      {"vision.resolution",
       [](RunConfig &c, const Entry &e) {
         std::tie(c.vision.width, c.vision.height) = as_resolution(e);
       }},
      {"vision.conf", [](RunConfig &c, const Entry &e) { c.vision.conf_threshold = as_double(e); }},
      {"vision.preview", [](RunConfig &c, const Entry &e) { c.vision.preview = as_bool(e); }},
      {"vision.autostart", [](RunConfig &c, const Entry &e) { c.autostart = as_bool(e); }},
      {"vision.direct_post", [](RunConfig &c, const Entry &e) { c.direct_post = as_bool(e); }},
      {"tracker.theta", [](RunConfig &c, const Entry &e) { c.vision.tracker.theta = as_double(e); }},
      {"tracker.l_max",
       [](RunConfig &c, const Entry &e) { c.vision.tracker.l_max = static_cast<int>(as_int(e)); }},
      {"tracker.dwell", [](RunConfig &c, const Entry &e) { c.vision.tracker.dwell_seconds = as_double(e); }},
      {"tracker.cooldown",
       [](RunConfig &c, const Entry &e) { c.vision.tracker.cooldown_seconds = as_double(e); }},
      {"tracker.labels", [](RunConfig &c, const Entry &e) { c.vision.tracker.target_labels = as_labels(e); }},
      {"reporting.enabled", [](RunConfig &c, const Entry &e) { c.reporting.enabled = as_bool(e); }},
      {"reporting.llm",
       [](RunConfig &c, const Entry &e) {
         if (e.value == "mock") {
           c.reporting.llm = LlmKind::kMock;
         } else if (e.value == "ollama") {
           c.reporting.llm = LlmKind::kOllama;
         } else {
           throw ValidationError(e.key, "expected mock or ollama");
         }
       }},
      {"reporting.base_url", [](RunConfig &c, const Entry &e) { c.reporting.base_url = e.value; }},
      {"reporting.model", [](RunConfig &c, const Entry &e) { c.reporting.options.model = e.value; }},
      {"reporting.deadline_s",
       [](RunConfig &c, const Entry &e) { c.reporting.options.deadline = as_seconds(e); }},
      {"reporting.max_in_flight",
       [](RunConfig &c, const Entry &e) { c.reporting.options.max_in_flight = as_count(e); }},
      {"reporting.queue_cap", [](RunConfig &c, const Entry &e) { c.reporting.options.queue_cap = as_count(e); }},
      {"reporting.prompt_cap",
       [](RunConfig &c, const Entry &e) { c.reporting.options.prompt_cap = as_count(e); }},
      {"reporting.mock_delay_s", [](RunConfig &c, const Entry &e) { c.reporting.mock.delay = as_seconds(e); }},
      {"reporting.mock_unavailable_calls",
       [](RunConfig &c, const Entry &e) { c.reporting.mock.unavailable_calls = as_count(e); }},
      {"reporting.mock_empty", [](RunConfig &c, const Entry &e) { c.reporting.mock.empty = as_bool(e); }},
      {"channel.kind",
       [](RunConfig &c, const Entry &e) {
         if (e.value == "mock") {
           c.channel.kind = ChannelKind::kMock;
         } else if (e.value == "console") {
           c.channel.kind = ChannelKind::kConsole;
         } else if (e.value == "slack") {
           c.channel.kind = ChannelKind::kSlack;
         } else {
           throw ValidationError(e.key, "expected mock, console or slack");
         }
       }},
      {"channel.channel_id", [](RunConfig &c, const Entry &e) { c.channel.channel_id = e.value; }},
      {"run.snapshot_dir", [](RunConfig &c, const Entry &e) { c.vision.snapshot_dir = e.value; }},
      {"run.metrics_out", [](RunConfig &c, const Entry &e) { c.metrics_out = e.value; }},
      {"run.seed",
       [](RunConfig &c, const Entry &e) {
         auto v = as_int(e);
         if (v < 0) throw ValidationError(e.key, "must be >= 0");
         c.seed = static_cast<std::uint64_t>(v);
       }},
      {"run.router_log", [](RunConfig &c, const Entry &e) { c.router_log = e.value; }},
      {"run.status_interval_s", [](RunConfig &c, const Entry &e) { c.status_interval_s = as_double(e); }},
      {"router.queue_cap", [](RunConfig &c, const Entry &e) { c.router_queue_cap = as_count(e); }},
      {"router.mailbox_cap", [](RunConfig &c, const Entry &e) { c.router_mailbox_cap = as_count(e); }},
  };
  return table;
}

constexpr std::string_view kSyntheticPrefix = "synthetic.";

// Rebuilds the inline script text keeping the original line numbers, so
// ParseError locations still point into the config file.
SyntheticScript inline_script(const std::vector<const Entry *> &entries) {
  std::string text;
  std::size_t line = 1;
  for (const auto *e : entries) {
    for (; line < e->line; ++line) text += '\n';
    text += e->key.substr(kSyntheticPrefix.size()) + " = " + e->value + '\n';
    ++line;
  }
  return parse_synthetic_script(text);
}

}  // namespace

RunConfig config_from_entries(const FlatConfig &flat, const std::filesystem::path &base_dir,
                              const std::function<bool(std::string_view)> &extra_key,
                              RunConfig defaults) {
  RunConfig config = std::move(defaults);
  std::vector<const Entry *> synthetic;
  for (const auto &e : flat.entries()) {
    if (e.key.starts_with(kSyntheticPrefix)) {
      synthetic.push_back(&e);
      continue;
    }
    if (auto it = setters().find(e.key); it != setters().end()) {
      it->second(config, e);
      continue;
    }
    if (extra_key && extra_key(e.key)) continue;
    throw ValidationError(e.key, "unknown key");
  }
  if (!synthetic.empty()) {
    try {
      config.backend.script = inline_script(synthetic);
    } catch (const InvalidScript &e) {
      throw ValidationError("synthetic", e.what());
    }
  }
  if (!config.backend.path.empty() && config.backend.path.is_relative()) {
    config.backend.path = base_dir / config.backend.path;
  }
  if (config.backend.kind == BackendKind::kSynthetic && !config.backend.script && !config.backend.path.empty()) {
    try {
      config.backend.script = load_synthetic_script(config.backend.path);
    } catch (const InvalidScript &e) {
      throw ValidationError("backend.path", e.what());
    }
  }
  if (const char *url = std::getenv("LLM_BASE_URL"); url != nullptr && *url != '\0') {
    config.reporting.base_url = url;
  }
  config.vision.llm_model = config.reporting.enabled ? config.reporting.options.model : std::string{};
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path &path) {
  auto flat = FlatConfig::load(path);
  return config_from_entries(flat, path.parent_path());
}

std::string describe_config(const RunConfig &c) {
  std::map<std::string, std::string> out;
  out["backend.kind"] = backend_kind_name(c.backend.kind);
  if (!c.backend.path.empty()) out["backend.path"] = c.backend.path.string();
  if (!c.backend.descriptor.empty()) out["backend.descriptor"] = c.backend.descriptor;
  if (c.backend.script) out["backend.inline_objects"] = std::to_string(c.backend.script->trajectories.size());
  out["vision.frame_rate"] = fmt::format("{}", c.vision.frame_rate);
  out["vision.resolution"] = fmt::format("{}x{}", c.vision.width, c.vision.height);
  out["vision.conf"] = fmt::format("{}", c.vision.conf_threshold);
  out["vision.preview"] = c.vision.preview ? "true" : "false";
  out["vision.autostart"] = c.autostart ? "true" : "false";
  out["vision.direct_post"] = c.direct_post ? "true" : "false";
  out["tracker.theta"] = fmt::format("{}", c.vision.tracker.theta);
  out["tracker.l_max"] = std::to_string(c.vision.tracker.l_max);
  out["tracker.dwell"] = fmt::format("{}", c.vision.tracker.dwell_seconds);
  out["tracker.cooldown"] = fmt::format("{}", c.vision.tracker.cooldown_seconds);
  std::string labels;
  for (const auto &l : c.vision.tracker.target_labels) labels += (labels.empty() ? "" : ",") + l;
  out["tracker.labels"] = labels.empty() ? "*" : labels;
  out["reporting.enabled"] = c.reporting.enabled ? "true" : "false";
  out["reporting.llm"] = c.reporting.llm == LlmKind::kMock ? "mock" : "ollama";
  out["reporting.base_url"] = c.reporting.base_url;
  out["reporting.model"] = c.reporting.options.model;
  out["reporting.deadline_s"] = fmt::format("{}", c.reporting.options.deadline.count() / 1000.0);
  out["reporting.max_in_flight"] = std::to_string(c.reporting.options.max_in_flight);
  out["reporting.queue_cap"] = std::to_string(c.reporting.options.queue_cap);
  out["reporting.prompt_cap"] = std::to_string(c.reporting.options.prompt_cap);
  out["reporting.mock_delay_s"] = fmt::format("{}", c.reporting.mock.delay.count() / 1000.0);
  out["channel.kind"] = channel_kind_name(c.channel.kind);
  out["channel.channel_id"] = c.channel.channel_id;
  out["run.snapshot_dir"] = c.vision.snapshot_dir.string();
  out["run.metrics_out"] = c.metrics_out.string();
  out["run.seed"] = c.seed ? std::to_string(*c.seed) : "none";
  out["run.status_interval_s"] = fmt::format("{}", c.status_interval_s);
  out["router.queue_cap"] = std::to_string(c.router_queue_cap);
  out["router.mailbox_cap"] = std::to_string(c.router_mailbox_cap);
  std::string text;
  for (const auto &[k, v] : out) text += k + " = " + v + '\n';
  return text;
}

}  // namespace edgewatch
