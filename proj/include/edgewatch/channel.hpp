#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "edgewatch/types.hpp"

namespace edgewatch {

enum class Direction { kInbound, kOutbound };

struct ChannelMessage {
  Direction direction = Direction::kOutbound;
  std::string text;
  std::optional<std::string> attachment;
  std::string channel_id;
  std::string sender;
  TimePoint timestamp{};

  friend bool operator==(const ChannelMessage &, const ChannelMessage &) = default;
};

using InboundHandler = std::function<void(const ChannelMessage &)>;

/// A chat backend. Outbound posts either succeed with an id or throw
/// ChannelUnavailable; inbound messages are pushed to the registered handler
/// from whatever context the backend listens on.
class ChannelAdapter {
 public:
  virtual ~ChannelAdapter() = default;

  virtual std::string post(const ChannelMessage &message) = 0;
  virtual std::string descriptor() const = 0;

  /// Begins the inbound stream. Throws AdapterInitError / AuthFailure.
  virtual void start() {}
  virtual void stop() {}

  void set_inbound_handler(InboundHandler handler);
  /// Feeds one inbound message to the handler (listener threads, tests, scenarios).
  void inject(const ChannelMessage &message);

 private:
  std::mutex handler_mutex_;
  InboundHandler handler_;
};

/// Throws ChannelUnavailable when the message has neither text nor attachment.
void require_postable(const ChannelMessage &message);

/// In-memory adapter: inject() for inbound, collect() for what was posted.
class MockAdapter final : public ChannelAdapter {
 public:
  std::string post(const ChannelMessage &message) override;
  std::string descriptor() const override { return "mock"; }

  void inject_text(const std::string &text, TimePoint at = {}, const std::string &sender = "operator");
  std::vector<ChannelMessage> collect() const;
  /// The next n posts throw ChannelUnavailable.
  void fail_next_posts(std::size_t n);
  std::size_t post_attempts() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ChannelMessage> posted_;
  std::size_t failures_left_ = 0;
  std::size_t attempts_ = 0;
};

/// Line-oriented operator console. Outbound lines: `[BOT] <text> (attachment: <path>)`.
class ConsoleAdapter final : public ChannelAdapter {
 public:
  /// With poll_stdin the listener polls file descriptor 0 so stop() never
  /// waits on a blocked read; otherwise `in` is read with std::getline.
  ConsoleAdapter(std::istream &in, std::ostream &out, bool poll_stdin = false);
  ~ConsoleAdapter() override;

  std::string post(const ChannelMessage &message) override;
  std::string descriptor() const override { return "console"; }

  void start() override;
  void stop() override;

  /// Called once when the input stream ends (immediately if it already has).
  void on_eof(std::function<void()> callback);
  /// Reads and injects every remaining input line on the calling thread.
  void pump();

 private:
  void listen(std::stop_token stop);
  void handle_line(const std::string &line);
  void signal_eof();

  std::istream &in_;
  std::ostream &out_;
  bool poll_stdin_;
  std::mutex out_mutex_;
  std::mutex eof_mutex_;
  std::function<void()> on_eof_;
  bool eof_seen_ = false;
  std::uint64_t next_id_ = 1;
  std::jthread listener_;
};

std::string format_console_line(const ChannelMessage &message);

}  // namespace edgewatch
