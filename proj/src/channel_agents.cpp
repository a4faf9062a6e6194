#include "edgewatch/channel_agents.hpp"

#include <fmt/format.h>

#include <fstream>

#include "edgewatch/errors.hpp"
#include "edgewatch/prompt.hpp"

namespace edgewatch {

std::string_view post_outcome_name(PostOutcome outcome) noexcept {
  switch (outcome) {
    case PostOutcome::kPosted:
      return "posted";
    case PostOutcome::kFallback:
      return "fallback";
    case PostOutcome::kSendFailure:
      return "send_failure";
  }
  return "send_failure";
}

namespace {

bool readable(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return in.good() && in.peek() != std::ifstream::traits_type::eof();
}

}  // namespace

CommunicationAgent::CommunicationAgent(Router &router, ChannelAdapter &adapter,
                                       std::string channel_id, MetricsSink &metrics)
    : router_(router), adapter_(adapter), channel_id_(std::move(channel_id)), metrics_(metrics) {}

void CommunicationAgent::attach() {
  router_.register_agent(kName, [this](const Event &e) { on_event(e); });
  router_.subscribe(id_, std::string(event_type::kReport), DeliveryMode::kInline);
  router_.subscribe(id_, std::string(event_type::kCommand), DeliveryMode::kInline);
  router_.subscribe(id_, std::string(event_type::kShutdown), DeliveryMode::kInline);
}

void CommunicationAgent::enable_direct_post() {
  router_.subscribe(id_, std::string(event_type::kSnapshot), DeliveryMode::kInline);
}

void CommunicationAgent::on_event(const Event &event) {
  if (event.type == event_type::kReport) {
    handle_report_event(event);
  } else if (event.type == event_type::kSnapshot) {
    handle_snapshot_event(event);
  }
}

CommunicationAgent::Result CommunicationAgent::send(ChannelMessage message, bool fallback) {
  message.direction = Direction::kOutbound;
  message.channel_id = channel_id_;
  message.sender = kName;
  message.timestamp = router_.clock().now();
  Result result;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      result.message_id = adapter_.post(message);
      result.outcome = fallback ? PostOutcome::kFallback : PostOutcome::kPosted;
      metrics_.add(fmt::format("channel.{}", post_outcome_name(result.outcome)));
      return result;
    } catch (const ChannelUnavailable &) {
      metrics_.add("channel.post_errors");
    }
  }
  result.outcome = PostOutcome::kSendFailure;
  metrics_.add("channel.send_failure");
  return result;
}

CommunicationAgent::Result CommunicationAgent::handle_report_event(const Event &event) {
  const auto *path = event.get<FilePath>("path");
  const auto *caption = event.get<std::string>("caption");
  ChannelMessage message;
  message.text = caption != nullptr ? *caption : std::string{};
  if (path != nullptr && readable(path->value)) {
    message.attachment = path->value;
    return send(std::move(message), false);
  }
  message.text += message.text.empty() ? std::string(kSnapshotUnavailable)
                                       : " " + std::string(kSnapshotUnavailable);
  return send(std::move(message), true);
}

CommunicationAgent::Result CommunicationAgent::handle_snapshot_event(const Event &event) {
  const auto *path = event.get<FilePath>("path");
  const auto *detections = event.get<Detections>("detections");
  Payload payload;
  if (path != nullptr) payload.emplace("path", *path);
  payload.emplace("caption", "ALERT: " + summarize_detections(detections ? *detections : Detections{}));
  Event synthetic = event;
  synthetic.payload = std::move(payload);
  return handle_report_event(synthetic);
}

ControlAgent::ControlAgent(Router &router, ChannelAdapter &adapter, std::string channel_id,
                           MetricsSink &metrics, StatusProvider status,
                           std::function<bool()> vision_running)
    : router_(router),
      adapter_(adapter),
      channel_id_(std::move(channel_id)),
      metrics_(metrics),
      status_(std::move(status)),
      vision_running_(std::move(vision_running)) {}

void ControlAgent::attach() {
  router_.register_agent(kName, [this](const Event &e) {
    if (e.type == event_type::kShutdown) {
      shutdown_ = true;
      if (shutdown_callback_) shutdown_callback_();
    }
  });
  router_.subscribe(id_, std::string(event_type::kShutdown), DeliveryMode::kInline);
  adapter_.set_inbound_handler([this](const ChannelMessage &m) { handle_inbound(m); });
}

void ControlAgent::reply(const std::string &text) {
  ChannelMessage message;
  message.direction = Direction::kOutbound;
  message.text = text;
  message.channel_id = channel_id_;
  message.sender = kName;
  message.timestamp = router_.clock().now();
  try {
    adapter_.post(message);
    metrics_.add("control.replies");
  } catch (const ChannelUnavailable &) {
    metrics_.add("errors.reply_failed");
  }
}

ControlAgent::Result ControlAgent::handle_inbound(const ChannelMessage &message) {
  Result result;
  result.command = parse_command(message.text);
  metrics_.add("commands.processed");
  const auto &cmd = result.command;

  auto publish = [&](Payload payload) {
    try {
      auto event = router_.make_event(std::string(event_type::kCommand), std::move(payload));
      result.event_seq = router_.send_to_agent(id_, std::string(kRouterName), std::move(event));
      return true;
    } catch (const Error &e) {
      metrics_.add("errors.command_publish");
      result.reply = std::string("command not delivered: ") + e.what();
      result.accepted = false;
      return false;
    }
  };

  const bool was_running = vision_running_ ? vision_running_() : false;
  switch (cmd.kind) {
    case CommandKind::kStart:
      if (publish(Payload{{"action", std::string("start")}})) {
        result.reply = was_running ? "vision agent already running" : "vision agent started";
      }
      break;
    case CommandKind::kStop:
      if (publish(Payload{{"action", std::string("stop")}})) {
        result.reply = was_running ? "vision agent stopped" : "vision agent already stopped";
      }
      break;
    case CommandKind::kConfigure: {
      if (auto error = validate_configure(cmd.params)) {
        result.reply = "configuration rejected: " + *error;
        result.accepted = false;
        metrics_.add("commands.rejected");
        break;
      }
      Payload payload{{"action", std::string("configure")}};
      std::string echo;
      for (const auto &[key, value] : cmd.params) {
        payload.emplace(key, value);
        echo += (echo.empty() ? "" : " ") + key + "=" + value;
      }
      if (publish(std::move(payload))) result.reply = "configuration applied: " + echo;
      break;
    }
    case CommandKind::kStatus:
      result.reply = status_ ? status_() : std::string("status unavailable");
      break;
    case CommandKind::kHelp:
      result.reply = help_text();
      break;
    case CommandKind::kUnknown:
      result.reply = "unrecognised command. " + help_text();
      result.accepted = false;
      metrics_.add("commands.unknown");
      break;
  }
  reply(result.reply);
  if (message.timestamp != TimePoint{}) {
    metrics_.record_latency("control.reply_latency_ms", (router_.clock().now() - message.timestamp).count());
  }
  return result;
}

}  // namespace edgewatch
