#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "edgewatch/detector.hpp"
#include "edgewatch/flat_config.hpp"
#include "edgewatch/reporting_agent.hpp"
#include "edgewatch/vision_agent.hpp"

namespace edgewatch {

enum class BackendKind { kReplay, kSynthetic, kExternal };
enum class LlmKind { kMock, kOllama };
enum class ChannelKind { kMock, kConsole, kSlack };

std::string_view backend_kind_name(BackendKind kind) noexcept;
std::string_view channel_kind_name(ChannelKind kind) noexcept;

struct BackendConfig {
  BackendKind kind = BackendKind::kSynthetic;
  /// Replay file or synthetic script; resolved against the config file's directory.
  std::filesystem::path path;
  /// Name of an out-of-process detector (kind = external).
  std::string descriptor;
  /// Inline trajectories (`synthetic.*` keys) when no script file is given.
  std::optional<SyntheticScript> script;
};

struct ReportingConfig {
  bool enabled = true;
  LlmKind llm = LlmKind::kOllama;
  std::string base_url = "http://127.0.0.1:11434";
  ReportingOptions options;
  MockLlmOptions mock;
};

struct ChannelConfig {
  ChannelKind kind = ChannelKind::kConsole;
  std::string channel_id = "console";
};

struct RunConfig {
  BackendConfig backend;
  VisionOptions vision;
  bool autostart = false;
  /// Forward snapshots straight to the channel (only meaningful without reporting).
  bool direct_post = false;
  ReportingConfig reporting;
  ChannelConfig channel;
  std::filesystem::path metrics_out;
  std::optional<std::uint64_t> seed;
  std::size_t router_queue_cap = 1024;
  std::size_t router_mailbox_cap = 16;
  /// Structured router log; empty disables it.
  std::filesystem::path router_log;
  /// Status line period in daemon mode.
  double status_interval_s = 10.0;

  /// Throws ValidationError naming the field.
  void validate() const;
};

/// Builds a RunConfig from parsed entries layered over `defaults`. Unknown
/// keys are a ValidationError unless `extra_key` claims them. `base_dir`
/// anchors relative backend paths. LLM_BASE_URL, when set, overrides
/// reporting.base_url.
RunConfig config_from_entries(const FlatConfig &flat, const std::filesystem::path &base_dir,
                              const std::function<bool(std::string_view)> &extra_key = {},
                              RunConfig defaults = {});

/// Throws IoError, ParseError or ValidationError.
RunConfig load_config(const std::filesystem::path &path);

/// Canonical `key = value` rendering of every setting, sorted by key.
std::string describe_config(const RunConfig &config);

}  // namespace edgewatch
