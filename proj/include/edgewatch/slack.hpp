#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "edgewatch/bounded_queue.hpp"
#include "edgewatch/channel.hpp"
#include "edgewatch/clock.hpp"

namespace edgewatch {

/// Socket Mode acknowledgement frame: `{"envelope_id": "<id>"}`.
std::string socket_mode_ack(std::string_view envelope_id);

/// What to do with one Socket Mode text frame.
struct SocketFrameAction {
  std::optional<std::string> ack;
  std::optional<ChannelMessage> message;
  bool reconnect = false;
};

/// Every frame carrying an envelope_id is acknowledged. events_api envelopes
/// with a plain user `message` event in `channel_id` surface as inbound
/// messages; bot echoes and edits are ignored. `disconnect` asks for a reconnect.
SocketFrameAction handle_socket_frame(std::string_view frame, const std::string &channel_id);

/// Reconnect delay: 1 s doubling per attempt, capped at 60 s.
std::chrono::seconds reconnect_backoff(int attempt) noexcept;

class WebSocketConnection {
 public:
  virtual ~WebSocketConnection() = default;
  /// nullopt on timeout; throws ChannelUnavailable when the connection is gone.
  virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
  virtual void send_text(const std::string &text) = 0;
  virtual void close() = 0;
};

/// Network seam for the Slack adapter; tests substitute a recording fake.
class SlackTransport {
 public:
  virtual ~SlackTransport() = default;

  /// Web API call (form-encoded, bearer token). Returns the decoded JSON body.
  /// Throws ChannelUnavailable on transport failure.
  virtual nlohmann::json call(const std::string &method,
                              const std::map<std::string, std::string> &form,
                              const std::string &token) = 0;
  virtual void upload(const std::string &url, const std::string &filename,
                      const std::string &bytes) = 0;
  virtual std::unique_ptr<WebSocketConnection> connect(const std::string &url) = 0;
};

/// HTTPS + WSS transport against slack.com.
std::shared_ptr<SlackTransport> make_https_slack_transport(std::string api_base = "https://slack.com/api");

/// Minimal RFC 6455 client over TLS (wss://) or plain TCP (ws://).
std::unique_ptr<WebSocketConnection> open_websocket(const std::string &url);

struct SlackOptions {
  /// Post on a background sender so callers never wait on the network.
  bool queue_outbound = true;
  std::size_t outbound_capacity = 64;
};

/// Slack backend: Socket Mode for inbound, chat.postMessage and the external
/// file-upload flow for outbound.
class SlackAdapter final : public ChannelAdapter {
 public:
  SlackAdapter(std::string bot_token, std::string app_token, std::string channel_id,
               std::shared_ptr<SlackTransport> transport, Clock &clock, SlackOptions options = {});
  ~SlackAdapter() override;

  /// Tokens from CHANNEL_BOT_TOKEN / CHANNEL_APP_TOKEN; AuthFailure when missing.
  static std::unique_ptr<SlackAdapter> from_environment(std::string channel_id, Clock &clock);

  /// Queued mode returns a local ticket id; the send happens on the sender thread.
  std::string post(const ChannelMessage &message) override;
  std::string descriptor() const override { return "slack:" + channel_id_; }

  /// auth.test with the bot token (AuthFailure), then starts the socket listener.
  void start() override;
  void stop() override;

  /// Synchronous send: chat.postMessage, or upload + completeUploadExternal with the text as comment.
  std::string send_now(const ChannelMessage &message);
  /// Runs one Socket Mode session until it ends; returns false on stop.
  bool run_session(std::stop_token stop);

  std::uint64_t send_failures() const noexcept { return send_failures_.load(); }

 private:
  void sender(std::stop_token stop);
  void listener(std::stop_token stop);

  std::string bot_token_;
  std::string app_token_;
  std::string channel_id_;
  std::shared_ptr<SlackTransport> transport_;
  Clock &clock_;
  SlackOptions options_;
  BoundedQueue<ChannelMessage> outbound_;
  std::atomic<std::uint64_t> tickets_{0};
  std::atomic<std::uint64_t> send_failures_{0};
  std::jthread sender_;
  std::jthread listener_;
};

}  // namespace edgewatch
