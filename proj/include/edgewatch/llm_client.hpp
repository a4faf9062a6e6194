#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <string>
#include <string_view>

#include "edgewatch/clock.hpp"

namespace edgewatch {

struct LlmRequest {
  std::string model;
  std::string prompt;
  bool stream = false;
};

enum class LlmStatus { kOk, kTimeout, kUnavailable, kError, kEmptyCaption };

std::string_view llm_status_name(LlmStatus status) noexcept;

/// One generate call. elapsed is the time the call occupied the caller, which
/// lets simulated runs account for latency without blocking.
struct LlmReply {
  LlmStatus status = LlmStatus::kOk;
  std::string text;
  Millis elapsed{0};
  std::string detail;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;

  /// Must return kTimeout instead of running past the deadline.
  virtual LlmReply generate(const LlmRequest &request, Millis deadline) = 0;
  virtual std::string descriptor() const = 0;
};

/// `{"model": "<name>", "prompt": "<text>", "stream": false}`
std::string ollama_request_body(const LlmRequest &request);

/// Extracts the `response` field; kError when the body is not an object with a string response.
LlmReply parse_ollama_response(std::string_view body);

/// POST <base_url>/api/generate against an Ollama-compatible server.
class OllamaClient final : public LlmClient {
 public:
  explicit OllamaClient(std::string base_url);

  LlmReply generate(const LlmRequest &request, Millis deadline) override;
  std::string descriptor() const override { return "ollama@" + base_url_; }

 private:
  std::string base_url_;
};

struct MockLlmOptions {
  Millis delay{0};
  /// The first N calls report kUnavailable.
  std::size_t unavailable_calls = 0;
  /// Every call returns a reply without a usable caption.
  bool malformed = false;
  bool empty = false;
};

/// Deterministic stand-in: the caption is "ALERT: <summary> at <timestamp>",
/// lifted from the fixed prompt template. Sleeps `delay` on the given clock
/// (a no-op on SimulatedClock) and reports it as elapsed.
class MockLlmClient final : public LlmClient {
 public:
  MockLlmClient(Clock &clock, MockLlmOptions options = {});

  LlmReply generate(const LlmRequest &request, Millis deadline) override;
  std::string descriptor() const override { return "mock"; }

  std::size_t calls() const;
  LlmRequest last_request() const;

 private:
  Clock &clock_;
  MockLlmOptions options_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
  LlmRequest last_;
};

}  // namespace edgewatch
