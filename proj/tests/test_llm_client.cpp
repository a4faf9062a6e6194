#include <gtest/gtest.h>

#include <thread>

#include <nlohmann/json.hpp>

#include "edgewatch/http.hpp"
#include "edgewatch/llm_client.hpp"
#include "edgewatch/prompt.hpp"

using namespace edgewatch;

namespace {

class LocalOllama : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/api/generate", [this](const httplib::Request &req, httplib::Response &res) {
      {
        std::lock_guard lock(mutex_);
        last_body_ = req.body;
      }
      if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
      res.status = status_;
      res.set_content(body_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    runner_ = std::jthread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    runner_.join();
  }

  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::string last_body() {
    std::lock_guard lock(mutex_);
    return last_body_;
  }

  httplib::Server server_;
  std::jthread runner_;
  int port_ = 0;
  int status_ = 200;
  std::string body_ = R"({"model":"tinyllama","response":"ALERT: person x1","done":true})";
  std::chrono::milliseconds delay_{0};
  std::mutex mutex_;
  std::string last_body_;
};

}  // namespace

TEST(OllamaBody, ExactShapeAndEscaping) {
  EXPECT_EQ(ollama_request_body(LlmRequest{"tinyllama:latest", "hi", false}),
            R"({"model": "tinyllama:latest", "prompt": "hi", "stream": false})");
  auto body = ollama_request_body(LlmRequest{"m", "line\n\"quoted\"", false});
  auto parsed = nlohmann::json::parse(body);
  EXPECT_EQ(parsed["prompt"], "line\n\"quoted\"");
  EXPECT_EQ(parsed["stream"], false);
}

TEST(OllamaResponse, ExtractsResponseField) {
  auto ok = parse_ollama_response(R"({"response":" hi "})");
  EXPECT_EQ(ok.status, LlmStatus::kOk);
  EXPECT_EQ(ok.text, " hi ");
  EXPECT_EQ(parse_ollama_response(R"({"done":true})").status, LlmStatus::kError);
  EXPECT_EQ(parse_ollama_response(R"({"response":3})").status, LlmStatus::kError);
  EXPECT_EQ(parse_ollama_response("[]").status, LlmStatus::kError);
  EXPECT_EQ(parse_ollama_response("garbage").status, LlmStatus::kError);
}

TEST(BaseUrl, SplitsOriginAndPrefix) {
  auto a = split_base_url("http://127.0.0.1:11434");
  EXPECT_EQ(a.origin, "http://127.0.0.1:11434");
  EXPECT_EQ(a.path_prefix, "");
  auto b = split_base_url("https://gw.example/ollama/");
  EXPECT_EQ(b.origin, "https://gw.example");
  EXPECT_EQ(b.path_prefix, "/ollama");
}

TEST_F(LocalOllama, SuccessfulGenerate) {
  OllamaClient client(base());
  auto reply = client.generate(LlmRequest{"tinyllama", "prompt text", false}, Millis{5000});
  EXPECT_EQ(reply.status, LlmStatus::kOk);
  EXPECT_EQ(reply.text, "ALERT: person x1");
  EXPECT_EQ(last_body(), R"({"model": "tinyllama", "prompt": "prompt text", "stream": false})");
}

TEST_F(LocalOllama, NonSuccessStatusIsError) {
  status_ = 500;
  body_ = R"({"error":"model not found"})";
  OllamaClient client(base());
  auto reply = client.generate(LlmRequest{"x", "p", false}, Millis{5000});
  EXPECT_EQ(reply.status, LlmStatus::kError);
  EXPECT_EQ(reply.detail, "HTTP 500");
}

TEST_F(LocalOllama, MissingResponseFieldIsError) {
  body_ = R"({"done":true})";
  OllamaClient client(base());
  EXPECT_EQ(client.generate(LlmRequest{"x", "p", false}, Millis{5000}).status, LlmStatus::kError);
}

TEST_F(LocalOllama, SlowServerTimesOutNearDeadline) {
  delay_ = std::chrono::milliseconds(1500);
  OllamaClient client(base());
  const auto t0 = std::chrono::steady_clock::now();
  auto reply = client.generate(LlmRequest{"x", "p", false}, Millis{300});
  const auto took = std::chrono::steady_clock::now() - t0;
  EXPECT_EQ(reply.status, LlmStatus::kTimeout);
  EXPECT_LT(took, std::chrono::milliseconds(1400));
}

TEST(OllamaClient, RefusedConnectionIsUnavailable) {
  OllamaClient client("http://127.0.0.1:1");
  EXPECT_EQ(client.generate(LlmRequest{"x", "p", false}, Millis{2000}).status, LlmStatus::kUnavailable);
  EXPECT_EQ(client.generate(LlmRequest{"x", "p", false}, Millis{0}).status, LlmStatus::kTimeout);
}

TEST(MockLlm, CaptionComesFromPromptAndIsDeterministic) {
  SimulatedClock clock(TimePoint{Millis{0}});
  MockLlmClient llm(clock, MockLlmOptions{.delay = Millis{250}});
  auto prompt = build_prompt("p.png", {Detection{BBox{0, 0, 1, 1}, "car", 0.8}}, TimePoint{Millis{1767225600000}},
                             "theta=0.3");
  auto a = llm.generate(LlmRequest{"m", prompt, false}, Millis{1000});
  auto b = llm.generate(LlmRequest{"m", prompt, false}, Millis{1000});
  EXPECT_EQ(a.status, LlmStatus::kOk);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.text, "ALERT: car x1 (max conf 0.80) at 2026-01-01T00:00:00.000Z");
  EXPECT_EQ(a.elapsed, Millis{250});
  EXPECT_EQ(llm.calls(), 2u);
  // Virtual time does not move on its own.
  EXPECT_EQ(clock.now(), TimePoint{Millis{0}});
}

TEST(MockLlm, FailureModes) {
  SimulatedClock clock(TimePoint{Millis{0}});
  MockLlmClient down(clock, MockLlmOptions{.unavailable_calls = 1});
  EXPECT_EQ(down.generate(LlmRequest{"m", "p", false}, Millis{1000}).status, LlmStatus::kUnavailable);
  EXPECT_EQ(down.generate(LlmRequest{"m", "p", false}, Millis{1000}).status, LlmStatus::kOk);

  MockLlmClient slow(clock, MockLlmOptions{.delay = Millis{5000}});
  auto r = slow.generate(LlmRequest{"m", "p", false}, Millis{1000});
  EXPECT_EQ(r.status, LlmStatus::kTimeout);
  EXPECT_EQ(r.elapsed, Millis{1000});

  MockLlmClient broken(clock, MockLlmOptions{.malformed = true});
  EXPECT_EQ(broken.generate(LlmRequest{"m", "p", false}, Millis{1000}).status, LlmStatus::kError);
}
