#include "edgewatch/llm_client.hpp"

#include <nlohmann/json.hpp>

#include "edgewatch/http.hpp"
#include "edgewatch/prompt.hpp"

namespace edgewatch {

std::string_view llm_status_name(LlmStatus status) noexcept {
  switch (status) {
    case LlmStatus::kOk:
      return "ok";
    case LlmStatus::kTimeout:
      return "timeout";
    case LlmStatus::kUnavailable:
      return "unavailable";
    case LlmStatus::kError:
      return "llm_error";
    case LlmStatus::kEmptyCaption:
      return "empty_caption";
  }
  return "llm_error";
}

BaseUrl split_base_url(const std::string &url) {
  auto scheme = url.find("://");
  auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  BaseUrl out;
  out.origin = url.substr(0, slash);
  if (slash != std::string::npos) out.path_prefix = url.substr(slash);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

namespace {

std::string json_string(const std::string &text) {
  return nlohmann::json(text).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

std::string ollama_request_body(const LlmRequest &request) {
  return "{\"model\": " + json_string(request.model) + ", \"prompt\": " +
         json_string(request.prompt) + ", \"stream\": " + (request.stream ? "true" : "false") + "}";
}

LlmReply parse_ollama_response(std::string_view body) {
  LlmReply reply;
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    reply.status = LlmStatus::kError;
    reply.detail = "response is not a JSON object";
    return reply;
  }
  auto it = parsed.find("response");
  if (it == parsed.end() || !it->is_string()) {
    reply.status = LlmStatus::kError;
    reply.detail = "missing 'response' field";
    return reply;
  }
  reply.text = it->get<std::string>();
  return reply;
}

OllamaClient::OllamaClient(std::string base_url) : base_url_(std::move(base_url)) {}

LlmReply OllamaClient::generate(const LlmRequest &request, Millis deadline) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - started);
  };
  LlmReply reply;
  if (deadline.count() <= 0) {
    reply.status = LlmStatus::kTimeout;
    return reply;
  }

  const auto url = split_base_url(base_url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(deadline));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(deadline));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(deadline));

  auto result =
      client.Post(url.path_prefix + "/api/generate", ollama_request_body(request), "application/json");
  reply.elapsed = elapsed();

  if (!result) {
    switch (result.error()) {
      case httplib::Error::Connection:
      case httplib::Error::SSLConnection:
      case httplib::Error::ProxyConnection:
        reply.status = LlmStatus::kUnavailable;
        break;
      case httplib::Error::ConnectionTimeout:
        reply.status = LlmStatus::kTimeout;
        break;
      case httplib::Error::Read:
        reply.status = reply.elapsed >= deadline ? LlmStatus::kTimeout : LlmStatus::kError;
        break;
      default:
        reply.status = LlmStatus::kError;
        break;
    }
    reply.detail = httplib::to_string(result.error());
    return reply;
  }
  if (reply.elapsed > deadline) {
    reply.status = LlmStatus::kTimeout;
    return reply;
  }
  if (result->status < 200 || result->status >= 300) {
    reply.status = LlmStatus::kError;
    reply.detail = "HTTP " + std::to_string(result->status);
    return reply;
  }
  auto parsed = parse_ollama_response(result->body);
  parsed.elapsed = reply.elapsed;
  return parsed;
}

MockLlmClient::MockLlmClient(Clock &clock, MockLlmOptions options)
    : clock_(clock), options_(options) {}

LlmReply MockLlmClient::generate(const LlmRequest &request, Millis deadline) {
  std::size_t call = 0;
  {
    std::lock_guard lock(mutex_);
    call = ++calls_;
    last_ = request;
  }
  LlmReply reply;
  if (call <= options_.unavailable_calls) {
    reply.status = LlmStatus::kUnavailable;
    reply.detail = "connection refused";
    return reply;
  }
  if (options_.delay > deadline) {
    clock_.sleep_for(deadline);
    reply.status = LlmStatus::kTimeout;
    reply.elapsed = deadline;
    return reply;
  }
  clock_.sleep_for(options_.delay);
  reply.elapsed = options_.delay;
  if (options_.malformed) {
    reply.status = LlmStatus::kError;
    reply.detail = "missing 'response' field";
    return reply;
  }
  reply.text = options_.empty ? std::string("  \n") : mock_caption(request.prompt);
  return reply;
}

std::size_t MockLlmClient::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

LlmRequest MockLlmClient::last_request() const {
  std::lock_guard lock(mutex_);
  return last_;
}

}  // namespace edgewatch
