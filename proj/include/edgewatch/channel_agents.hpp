#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "edgewatch/channel.hpp"
#include "edgewatch/command.hpp"
#include "edgewatch/metrics.hpp"
#include "edgewatch/router.hpp"

namespace edgewatch {

enum class PostOutcome { kPosted, kFallback, kSendFailure };

std::string_view post_outcome_name(PostOutcome outcome) noexcept;

inline constexpr std::string_view kSnapshotUnavailable = "[snapshot unavailable]";

/// Forwards report events (caption + snapshot) to the chat channel.
class CommunicationAgent {
 public:
  static constexpr const char *kName = "communication";

  CommunicationAgent(Router &router, ChannelAdapter &adapter, std::string channel_id,
                     MetricsSink &metrics);

  /// Registers and subscribes report, command and shutdown (all inline).
  void attach();

  struct Result {
    PostOutcome outcome = PostOutcome::kPosted;
    std::optional<std::string> message_id;
  };

  /// Posts caption with the snapshot attached. An unreadable snapshot degrades
  /// to a text-only post; a failed post is retried once before it is counted
  /// as a send failure.
  Result handle_report_event(const Event &event);

  /// Same handling for a snapshot forwarded without a caption (direct_post mode).
  Result handle_snapshot_event(const Event &event);
  void enable_direct_post();

 private:
  void on_event(const Event &event);
  Result send(ChannelMessage message, bool fallback);

  Router &router_;
  ChannelAdapter &adapter_;
  std::string channel_id_;
  MetricsSink &metrics_;
  AgentId id_{kName};
};

/// Live status line for the `status` command.
using StatusProvider = std::function<std::string()>;

/// Listens to operator messages, turns them into command events and replies.
class ControlAgent {
 public:
  static constexpr const char *kName = "control";

  ControlAgent(Router &router, ChannelAdapter &adapter, std::string channel_id,
               MetricsSink &metrics, StatusProvider status, std::function<bool()> vision_running);

  /// Registers, subscribes shutdown (inline) and takes over the adapter's inbound stream.
  void attach();

  struct Result {
    Command command;
    std::optional<std::uint64_t> event_seq;
    std::string reply;
    bool accepted = true;
  };

  Result handle_inbound(const ChannelMessage &message);

  bool shutdown_requested() const noexcept { return shutdown_.load(); }
  void on_shutdown(std::function<void()> callback) { shutdown_callback_ = std::move(callback); }

 private:
  void reply(const std::string &text);

  Router &router_;
  ChannelAdapter &adapter_;
  std::string channel_id_;
  MetricsSink &metrics_;
  StatusProvider status_;
  std::function<bool()> vision_running_;
  AgentId id_{kName};
  std::atomic<bool> shutdown_{false};
  std::function<void()> shutdown_callback_;
};

}  // namespace edgewatch
