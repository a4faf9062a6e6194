#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "edgewatch/llm_client.hpp"
#include "edgewatch/metrics.hpp"
#include "edgewatch/router.hpp"

namespace edgewatch {

struct ReportingOptions {
  std::string model = "tinyllama:latest";
  Millis deadline{60'000};
  std::size_t max_in_flight = 1;
  std::size_t queue_cap = 4;
  std::size_t prompt_cap = 2000;
  Millis retry_backoff{1'000};
};

enum class ReportOutcomeKind { kDelivered, kTimeout, kDropped, kLlmError };

std::string_view report_outcome_name(ReportOutcomeKind kind) noexcept;

struct ReportOutcome {
  std::uint64_t snapshot_seq = 0;
  ReportOutcomeKind outcome = ReportOutcomeKind::kDelivered;
  std::int64_t latency_ms = 0;
};

struct CaptionResult {
  LlmStatus status = LlmStatus::kOk;
  std::string caption;
  Millis elapsed{0};
  int attempts = 0;
  std::string detail;
};

/// Builds the prompt and performs one generate call (plus a single retry
/// after `backoff` when the endpoint is unavailable). The caption is trimmed;
/// an empty caption is kEmptyCaption.
CaptionResult generate_caption(const std::string &path, const Detections &detections,
                               TimePoint timestamp, const std::string &args_str, LlmClient &client,
                               const ReportingOptions &options, Clock &clock);

struct ReportJob {
  EventPtr snapshot;
};

/// Turns snapshot events into report events off the dispatch path.
///
/// Snapshots land in the agent's router mailbox (capacity queue_cap,
/// drop-oldest). A job is taken only while fewer than max_in_flight are
/// running; every consumed snapshot ends with exactly one ReportOutcome.
class ReportingAgent {
 public:
  static constexpr const char *kName = "reporting";

  ReportingAgent(Router &router, LlmClient &client, ReportingOptions options, MetricsSink &metrics);
  ~ReportingAgent();

  /// Registers, subscribes snapshot (background) plus command and shutdown (inline).
  void attach();

  // Step-wise interface used by simulated runs and by the worker threads.
  std::optional<ReportJob> try_begin();
  CaptionResult execute(const ReportJob &job);
  void complete(const ReportJob &job, const CaptionResult &result);

  /// Spawns max_in_flight worker threads.
  void start_workers();
  /// Stops workers after their current job; anything still queued is recorded as dropped.
  void stop_workers();
  /// Records everything still queued as dropped.
  void drop_pending();

  std::vector<ReportOutcome> outcomes() const;
  std::size_t pending() const;
  std::size_t in_flight() const noexcept { return in_flight_.load(); }
  std::uint64_t consumed() const;
  /// Number of jobs executed on the router's dispatch context; must stay 0.
  std::uint64_t dispatch_context_violations() const noexcept { return violations_.load(); }
  std::string model() const;
  const AgentId &id() const noexcept { return id_; }

 private:
  void on_event(const Event &event);
  void record(std::uint64_t seq, ReportOutcomeKind kind, const Event &snapshot);
  void worker(std::stop_token stop);

  Router &router_;
  LlmClient &client_;
  ReportingOptions options_;
  MetricsSink &metrics_;
  AgentId id_{kName};

  mutable std::mutex mutex_;
  std::vector<ReportOutcome> outcomes_;
  std::string model_;

  std::mutex begin_mutex_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::uint64_t> violations_{0};
  std::vector<std::jthread> workers_;
};

}  // namespace edgewatch
