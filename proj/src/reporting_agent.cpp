#include "edgewatch/reporting_agent.hpp"

#include <fmt/format.h>

#include "edgewatch/errors.hpp"
#include "edgewatch/flat_config.hpp"
#include "edgewatch/prompt.hpp"

namespace edgewatch {

std::string_view report_outcome_name(ReportOutcomeKind kind) noexcept {
  switch (kind) {
    case ReportOutcomeKind::kDelivered:
      return "delivered";
    case ReportOutcomeKind::kTimeout:
      return "timeout";
    case ReportOutcomeKind::kDropped:
      return "dropped";
    case ReportOutcomeKind::kLlmError:
      return "llm_error";
  }
  return "llm_error";
}

CaptionResult generate_caption(const std::string &path, const Detections &detections,
                               TimePoint timestamp, const std::string &args_str, LlmClient &client,
                               const ReportingOptions &options, Clock &clock) {
  LlmRequest request{options.model,
                     build_prompt(path, detections, timestamp, args_str, options.prompt_cap), false};
  CaptionResult result;
  Millis remaining = options.deadline;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ++result.attempts;
    auto reply = client.generate(request, remaining);
    result.elapsed += reply.elapsed;
    remaining -= reply.elapsed;
    result.status = reply.status;
    result.detail = reply.detail;
    if (reply.status == LlmStatus::kOk) {
      auto caption = std::string(trim(reply.text));
      if (caption.empty()) {
        result.status = LlmStatus::kEmptyCaption;
      } else {
        result.caption = std::move(caption);
      }
      return result;
    }
    if (reply.status != LlmStatus::kUnavailable || attempt == 1) return result;
    // Single retry for a refused connection, e.g. the server is still starting.
    if (remaining <= options.retry_backoff) {
      result.elapsed += remaining;
      result.status = LlmStatus::kTimeout;
      return result;
    }
    clock.sleep_for(options.retry_backoff);
    result.elapsed += options.retry_backoff;
    remaining -= options.retry_backoff;
  }
  return result;
}

ReportingAgent::ReportingAgent(Router &router, LlmClient &client, ReportingOptions options,
                               MetricsSink &metrics)
    : router_(router),
      client_(client),
      options_(std::move(options)),
      metrics_(metrics),
      model_(options_.model) {
  if (options_.max_in_flight == 0) throw ValidationError("reporting.max_in_flight", "must be >= 1");
  if (options_.queue_cap == 0) throw ValidationError("reporting.queue_cap", "must be >= 1");
  if (options_.deadline.count() <= 0) throw ValidationError("reporting.deadline_s", "must be > 0");
}

ReportingAgent::~ReportingAgent() { workers_.clear(); }

void ReportingAgent::attach() {
  AgentOptions agent_options;
  agent_options.mailbox_capacity = options_.queue_cap;
  agent_options.on_drop = [this](const Event &dropped) {
    record(dropped.seq, ReportOutcomeKind::kDropped, dropped);
  };
  router_.register_agent(kName, [this](const Event &e) { on_event(e); }, std::move(agent_options));
  router_.subscribe(id_, std::string(event_type::kSnapshot), DeliveryMode::kBackground);
  router_.subscribe(id_, std::string(event_type::kCommand), DeliveryMode::kInline);
  router_.subscribe(id_, std::string(event_type::kShutdown), DeliveryMode::kInline);
}

void ReportingAgent::on_event(const Event &event) {
  // Snapshots arrive through the mailbox; only control traffic reaches here.
  if (event.type != event_type::kCommand) return;
  const auto *action = event.get<std::string>("action");
  const auto *model = event.get<std::string>("model");
  if (action != nullptr && *action == "configure" && model != nullptr && !model->empty()) {
    std::lock_guard lock(mutex_);
    model_ = *model;
  }
}

std::optional<ReportJob> ReportingAgent::try_begin() {
  std::lock_guard lock(begin_mutex_);
  if (in_flight_.load() >= options_.max_in_flight) return std::nullopt;
  auto event = router_.mailbox(id_).try_pop();
  if (!event) return std::nullopt;
  ++in_flight_;
  return ReportJob{std::move(*event)};
}

CaptionResult ReportingAgent::execute(const ReportJob &job) {
  if (router_.on_dispatch_context()) ++violations_;
  const auto &snapshot = *job.snapshot;
  const auto *path = snapshot.get<FilePath>("path");
  const auto *detections = snapshot.get<Detections>("detections");
  const auto *stamp = snapshot.get<std::int64_t>("timestamp");
  const auto *args = snapshot.get<ConfigArgs>("args");
  if (path == nullptr || detections == nullptr) {
    CaptionResult bad;
    bad.status = LlmStatus::kError;
    bad.detail = "snapshot payload missing path or detections";
    return bad;
  }
  auto options = options_;
  options.model = model();
  const TimePoint ts = stamp != nullptr ? TimePoint{Millis{*stamp}} : snapshot.timestamp;
  return generate_caption(path->value, *detections, ts, args ? format_args(*args) : std::string{},
                          client_, options, router_.clock());
}

void ReportingAgent::complete(const ReportJob &job, const CaptionResult &result) {
  const auto &snapshot = *job.snapshot;
  ReportOutcomeKind kind = ReportOutcomeKind::kLlmError;
  if (result.status == LlmStatus::kOk) {
    try {
      const auto *path = snapshot.get<FilePath>("path");
      auto report = router_.make_event(std::string(event_type::kReport),
                                       Payload{{"path", *path}, {"caption", result.caption}});
      router_.send_to_agent(id_, std::string(kRouterName), std::move(report));
      kind = ReportOutcomeKind::kDelivered;
    } catch (const Error &) {
      metrics_.add("errors.report_publish");
      kind = ReportOutcomeKind::kDropped;
    }
  } else if (result.status == LlmStatus::kTimeout) {
    kind = ReportOutcomeKind::kTimeout;
  } else {
    metrics_.add(fmt::format("errors.llm.{}", llm_status_name(result.status)));
  }
  record(snapshot.seq, kind, snapshot);
  --in_flight_;
}

void ReportingAgent::record(std::uint64_t seq, ReportOutcomeKind kind, const Event &snapshot) {
  const auto latency = (router_.clock().now() - snapshot.timestamp).count();
  {
    std::lock_guard lock(mutex_);
    outcomes_.push_back(ReportOutcome{seq, kind, latency});
  }
  metrics_.add(fmt::format("reports.{}", report_outcome_name(kind)));
  metrics_.add("reports.consumed");
  if (kind == ReportOutcomeKind::kDelivered) metrics_.record_latency("report_latency_ms", latency);
  metrics_.append_record(fmt::format("report seq={} outcome={} latency_ms={}", seq,
                                     report_outcome_name(kind), latency));
}

void ReportingAgent::worker(std::stop_token stop) {
  auto &mailbox = router_.mailbox(id_);
  while (!stop.stop_requested()) {
    auto event = mailbox.wait_pop(stop);
    if (!event) continue;
    ++in_flight_;
    ReportJob job{std::move(*event)};
    auto result = execute(job);
    complete(job, result);
  }
}

void ReportingAgent::start_workers() {
  if (!workers_.empty()) return;
  for (std::size_t i = 0; i < options_.max_in_flight; ++i) {
    workers_.emplace_back([this](std::stop_token stop) { worker(stop); });
  }
}

void ReportingAgent::stop_workers() {
  for (auto &w : workers_) w.request_stop();
  workers_.clear();
  drop_pending();
}

void ReportingAgent::drop_pending() {
  for (auto &event : router_.mailbox(id_).drain()) {
    record(event->seq, ReportOutcomeKind::kDropped, *event);
  }
}

std::vector<ReportOutcome> ReportingAgent::outcomes() const {
  std::lock_guard lock(mutex_);
  return outcomes_;
}

std::size_t ReportingAgent::pending() const {
  return router_.mailbox(id_).size();
}

std::uint64_t ReportingAgent::consumed() const {
  std::lock_guard lock(mutex_);
  return outcomes_.size();
}

std::string ReportingAgent::model() const {
  std::lock_guard lock(mutex_);
  return model_;
}

}  // namespace edgewatch
