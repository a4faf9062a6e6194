#include "edgewatch/slack.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "edgewatch/errors.hpp"
#include "edgewatch/http.hpp"

namespace edgewatch {

std::string socket_mode_ack(std::string_view envelope_id) {
  return "{\"envelope_id\": " + nlohmann::json(std::string(envelope_id)).dump() + "}";
}

namespace {

TimePoint parse_slack_ts(const nlohmann::json &event) {
  auto it = event.find("ts");
  if (it == event.end() || !it->is_string()) return {};
  try {
    const double seconds = std::stod(it->get<std::string>());
    return TimePoint{Millis{static_cast<Millis::rep>(seconds * 1000.0)}};
  } catch (const std::exception &) {
    return {};
  }
}

}  // namespace

SocketFrameAction handle_socket_frame(std::string_view frame, const std::string &channel_id) {
  SocketFrameAction action;
  auto json = nlohmann::json::parse(frame, nullptr, false);
  if (json.is_discarded() || !json.is_object()) return action;

  if (auto id = json.find("envelope_id"); id != json.end() && id->is_string()) {
    action.ack = socket_mode_ack(id->get<std::string>());
  }
  const auto type = json.value("type", std::string{});
  if (type == "disconnect") {
    action.reconnect = true;
    return action;
  }
  if (type != "events_api") return action;

  const auto payload = json.value("payload", nlohmann::json::object());
  const auto event = payload.value("event", nlohmann::json::object());
  if (event.value("type", std::string{}) != "message") return action;
  if (event.contains("subtype") || event.contains("bot_id")) return action;
  if (event.value("channel", std::string{}) != channel_id) return action;

  ChannelMessage message;
  message.direction = Direction::kInbound;
  message.text = event.value("text", std::string{});
  message.channel_id = channel_id;
  message.sender = event.value("user", std::string{});
  message.timestamp = parse_slack_ts(event);
  action.message = std::move(message);
  return action;
}

std::chrono::seconds reconnect_backoff(int attempt) noexcept {
  if (attempt <= 0) return std::chrono::seconds(1);
  if (attempt >= 6) return std::chrono::seconds(60);
  return std::chrono::seconds(std::min(60, 1 << attempt));
}

namespace {

class HttpsSlackTransport final : public SlackTransport {
 public:
  explicit HttpsSlackTransport(std::string api_base) : base_(split_base_url(api_base)) {}

  nlohmann::json call(const std::string &method, const std::map<std::string, std::string> &form,
                      const std::string &token) override {
    httplib::Client client(base_.origin);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(30));
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    httplib::Params params(form.begin(), form.end());
    auto result = client.Post(base_.path_prefix + "/" + method, headers, params);
    if (!result) throw ChannelUnavailable(method + ": " + httplib::to_string(result.error()));
    if (result->status == 401 || result->status == 403) throw AuthFailure(method + ": HTTP " + std::to_string(result->status));
    auto json = nlohmann::json::parse(result->body, nullptr, false);
    if (json.is_discarded()) throw ChannelUnavailable(method + ": non-JSON response");
    return json;
  }

  void upload(const std::string &url, const std::string &filename, const std::string &bytes) override {
    auto target = split_base_url(url);
    httplib::Client client(target.origin);
    client.set_read_timeout(std::chrono::seconds(60));
    httplib::MultipartFormDataItems items{{"file", bytes, filename, "application/octet-stream"}};
    auto result = client.Post(target.path_prefix.empty() ? "/" : target.path_prefix, items);
    if (!result) throw ChannelUnavailable("file upload: " + httplib::to_string(result.error()));
    if (result->status != 200) throw ChannelUnavailable("file upload: HTTP " + std::to_string(result->status));
  }

  std::unique_ptr<WebSocketConnection> connect(const std::string &url) override {
    return open_websocket(url);
  }

 private:
  BaseUrl base_;
};

bool is_auth_error(const std::string &error) {
  return error == "invalid_auth" || error == "not_authed" || error == "account_inactive" ||
         error == "token_revoked" || error == "not_allowed_token_type" || error == "missing_scope";
}

void check_ok(const nlohmann::json &reply, const std::string &method) {
  if (reply.value("ok", false)) return;
  const auto error = reply.value("error", std::string("unknown_error"));
  if (is_auth_error(error)) throw AuthFailure(method + ": " + error);
  throw ChannelUnavailable(method + ": " + error);
}

}  // namespace

std::shared_ptr<SlackTransport> make_https_slack_transport(std::string api_base) {
  return std::make_shared<HttpsSlackTransport>(std::move(api_base));
}

SlackAdapter::SlackAdapter(std::string bot_token, std::string app_token, std::string channel_id,
                           std::shared_ptr<SlackTransport> transport, Clock &clock,
                           SlackOptions options)
    : bot_token_(std::move(bot_token)),
      app_token_(std::move(app_token)),
      channel_id_(std::move(channel_id)),
      transport_(std::move(transport)),
      clock_(clock),
      options_(options),
      outbound_(options.outbound_capacity) {
  if (bot_token_.empty() || app_token_.empty()) throw AuthFailure("missing Slack tokens");
  if (channel_id_.empty()) throw AdapterInitError("slack channel_id is required");
}

SlackAdapter::~SlackAdapter() { stop(); }

std::unique_ptr<SlackAdapter> SlackAdapter::from_environment(std::string channel_id, Clock &clock) {
  const char *bot = std::getenv("CHANNEL_BOT_TOKEN");
  const char *app = std::getenv("CHANNEL_APP_TOKEN");
  if (bot == nullptr || app == nullptr || *bot == '\0' || *app == '\0') {
    throw AuthFailure("CHANNEL_BOT_TOKEN and CHANNEL_APP_TOKEN must be set");
  }
  return std::make_unique<SlackAdapter>(bot, app, std::move(channel_id),
                                        make_https_slack_transport(), clock);
}

std::string SlackAdapter::send_now(const ChannelMessage &message) {
  require_postable(message);
  if (!message.attachment) {
    auto reply = transport_->call("chat.postMessage", {{"channel", channel_id_}, {"text", message.text}},
                                  bot_token_);
    check_ok(reply, "chat.postMessage");
    return reply.value("ts", std::string{});
  }

  std::ifstream in(*message.attachment, std::ios::binary);
  if (!in) throw ChannelUnavailable("cannot read attachment " + *message.attachment);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  const auto data = bytes.str();
  const auto filename = std::filesystem::path(*message.attachment).filename().string();

  auto ticket = transport_->call("files.getUploadURLExternal",
                                 {{"filename", filename}, {"length", std::to_string(data.size())}},
                                 bot_token_);
  check_ok(ticket, "files.getUploadURLExternal");
  const auto upload_url = ticket.value("upload_url", std::string{});
  const auto file_id = ticket.value("file_id", std::string{});
  if (upload_url.empty() || file_id.empty()) {
    throw ChannelUnavailable("files.getUploadURLExternal: missing upload_url or file_id");
  }
  transport_->upload(upload_url, filename, data);

  nlohmann::json files = nlohmann::json::array({{{"id", file_id}, {"title", filename}}});
  std::map<std::string, std::string> form{{"files", files.dump()}, {"channel_id", channel_id_}};
  if (!message.text.empty()) form.emplace("initial_comment", message.text);
  auto done = transport_->call("files.completeUploadExternal", form, bot_token_);
  check_ok(done, "files.completeUploadExternal");
  return file_id;
}

std::string SlackAdapter::post(const ChannelMessage &message) {
  require_postable(message);
  if (!options_.queue_outbound || !sender_.joinable()) return send_now(message);
  auto copy = message;
  if (!outbound_.try_push(copy)) throw ChannelUnavailable("slack outbound queue full");
  return "queued-" + std::to_string(++tickets_);
}

void SlackAdapter::start() {
  auto auth = transport_->call("auth.test", {}, bot_token_);
  if (!auth.value("ok", false)) {
    throw AuthFailure("auth.test: " + auth.value("error", std::string("invalid_auth")));
  }
  if (options_.queue_outbound && !sender_.joinable()) {
    outbound_.reopen();
    sender_ = std::jthread([this](std::stop_token stop) { sender(stop); });
  }
  if (!listener_.joinable()) {
    listener_ = std::jthread([this](std::stop_token stop) { listener(stop); });
  }
}

void SlackAdapter::stop() {
  if (listener_.joinable()) {
    listener_.request_stop();
    listener_.join();
  }
  if (sender_.joinable()) {
    outbound_.close();
    sender_.request_stop();
    sender_.join();
  }
}

void SlackAdapter::sender(std::stop_token stop) {
  while (auto message = outbound_.wait_pop(stop)) {
    try {
      send_now(*message);
    } catch (const Error &) {
      try {
        send_now(*message);
      } catch (const Error &) {
        ++send_failures_;
      }
    }
  }
}

bool SlackAdapter::run_session(std::stop_token stop) {
  auto opened = transport_->call("apps.connections.open", {}, app_token_);
  check_ok(opened, "apps.connections.open");
  const auto url = opened.value("url", std::string{});
  if (url.empty()) throw ChannelUnavailable("apps.connections.open: missing url");
  auto socket = transport_->connect(url);
  while (!stop.stop_requested()) {
    auto frame = socket->receive(std::chrono::milliseconds(500));
    if (!frame) continue;
    auto action = handle_socket_frame(*frame, channel_id_);
    if (action.ack) socket->send_text(*action.ack);
    if (action.message) inject(*action.message);
    if (action.reconnect) {
      socket->close();
      return true;
    }
  }
  socket->close();
  return false;
}

void SlackAdapter::listener(std::stop_token stop) {
  int attempt = 0;
  while (!stop.stop_requested()) {
    try {
      if (!run_session(stop)) return;
      attempt = 0;
      continue;
    } catch (const AuthFailure &) {
      return;
    } catch (const Error &) {
    }
    // Sleep in short slices so stop() stays prompt during long backoffs.
    auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(reconnect_backoff(attempt++));
    while (wait.count() > 0 && !stop.stop_requested()) {
      auto slice = std::min(wait, std::chrono::milliseconds(100));
      clock_.sleep_for(slice);
      wait -= slice;
    }
  }
}

}  // namespace edgewatch
