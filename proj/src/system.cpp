#include "edgewatch/system.hpp"

#include <fmt/format.h>

#include <iostream>

#include "edgewatch/errors.hpp"
#include "edgewatch/slack.hpp"

namespace edgewatch {

std::unique_ptr<DetectorBackend> make_backend(const RunConfig &config) {
  switch (config.backend.kind) {
    case BackendKind::kReplay:
      return ReplayBackend::from_file(config.backend.path);
    case BackendKind::kSynthetic: {
      auto script = config.backend.script ? *config.backend.script : load_synthetic_script(config.backend.path);
      if (config.seed) script.seed = *config.seed;
      return std::make_unique<SyntheticBackend>(std::move(script));
    }
    case BackendKind::kExternal:
      break;
  }
  throw AdapterInitError("no in-process detector for external backend '" + config.backend.descriptor +
                         "'; feed its output through a replay file");
}

std::unique_ptr<LlmClient> make_llm_client(const RunConfig &config, Clock &clock) {
  if (config.reporting.llm == LlmKind::kMock) {
    return std::make_unique<MockLlmClient>(clock, config.reporting.mock);
  }
  return std::make_unique<OllamaClient>(config.reporting.base_url);
}

std::unique_ptr<ChannelAdapter> make_adapter(const RunConfig &config, Clock &clock) {
  switch (config.channel.kind) {
    case ChannelKind::kMock:
      return std::make_unique<MockAdapter>();
    case ChannelKind::kConsole:
      return std::make_unique<ConsoleAdapter>(std::cin, std::cout, true);
    case ChannelKind::kSlack:
      try {
        return SlackAdapter::from_environment(config.channel.channel_id, clock);
      } catch (const AuthFailure &e) {
        throw AdapterInitError(std::string("slack: ") + e.what());
      }
  }
  throw AdapterInitError("unknown channel kind");
}

namespace {

// Keys that always appear in the summary so scenario assertions can rely on them.
constexpr const char *kBaselineCounters[] = {
    "commands.processed",    "commands.rejected",         "commands.unknown",
    "control.replies",       "vision.triggers",           "reports.consumed",
    "reports.delivered",     "reports.timeout",           "reports.dropped",
    "reports.llm_error",     "channel.posted",            "channel.fallback",
    "channel.send_failure",  "channel.post_errors",       "errors.backend",
    "errors.snapshot_io",    "errors.router_queue_full",  "errors.snapshot_publish",
    "errors.report_publish", "errors.reply_failed",       "errors.command_publish",
};

}  // namespace

System::System(RunConfig config, Clock &clock, SystemParts parts)
    : config_(std::move(config)), clock_(clock) {
  config_.validate();
  for (const auto *key : kBaselineCounters) metrics_.add(key, 0);

  std::error_code ec;
  std::filesystem::create_directories(config_.vision.snapshot_dir, ec);
  if (ec || !std::filesystem::is_directory(config_.vision.snapshot_dir)) {
    throw SnapshotDirError("cannot create snapshot directory " + config_.vision.snapshot_dir.string() +
                           (ec ? ": " + ec.message() : std::string{}));
  }

  RouterOptions router_options;
  router_options.queue_capacity = config_.router_queue_cap;
  router_options.mailbox_capacity = config_.router_mailbox_cap;
  router_options.snapshot_root = config_.vision.snapshot_dir;
  if (!config_.router_log.empty()) {
    router_log_.open(config_.router_log, std::ios::out | std::ios::trunc);
    if (!router_log_) throw IoError("cannot open router log " + config_.router_log.string());
    router_options.log = &router_log_;
  }
  router_ = std::make_unique<Router>(clock_, std::move(router_options));

  adapter_ = parts.adapter ? std::move(parts.adapter) : make_adapter(config_, clock_);
  auto backend = parts.backend ? std::move(parts.backend) : make_backend(config_);

  vision_ = std::make_unique<VisionAgent>(*router_, std::move(backend), config_.vision, metrics_);
  vision_->attach();

  if (config_.reporting.enabled) {
    llm_ = parts.llm ? std::move(parts.llm) : make_llm_client(config_, clock_);
    reporting_ = std::make_unique<ReportingAgent>(*router_, *llm_, config_.reporting.options, metrics_);
    reporting_->attach();
  }

  communication_ = std::make_unique<CommunicationAgent>(*router_, *adapter_, config_.channel.channel_id, metrics_);
  communication_->attach();
  if (config_.direct_post) communication_->enable_direct_post();

  control_ = std::make_unique<ControlAgent>(
      *router_, *adapter_, config_.channel.channel_id, metrics_, [this] { return status_line(); },
      [this] { return vision_->running(); });
  control_->attach();

  if (config_.autostart) vision_->start();

  try {
    adapter_->start();
  } catch (const AuthFailure &e) {
    throw AdapterInitError(std::string("channel start: ") + e.what());
  } catch (const ChannelUnavailable &e) {
    throw AdapterInitError(std::string("channel start: ") + e.what());
  }
}

System::~System() {
  if (!shut_down_) {
    try {
      shutdown();
    } catch (...) {
    }
  }
}

void System::start_threads() {
  dispatch_thread_ = std::jthread([this](std::stop_token stop) { final_stats_ = router_->run_dispatch(stop); });
  if (reporting_) reporting_->start_workers();
  vision_thread_ = std::jthread([this](std::stop_token stop) { vision_->run_loop(stop); });
}

void System::publish_shutdown() {
  if (shutdown_published_) return;
  shutdown_published_ = true;
  try {
    router_->send_to_agent(AgentId{std::string(kRouterName)}, std::string(kRouterName),
                           router_->make_event(std::string(event_type::kShutdown)));
  } catch (const QueueFull &) {
    metrics_.add("errors.router_queue_full");
  }
}

void System::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  publish_shutdown();

  adapter_->stop();

  if (vision_thread_.joinable()) {
    vision_thread_.request_stop();
    vision_thread_.join();
  }
  vision_->stop();

  // Workers finish the job in hand (bounded by the LLM deadline); whatever is
  // still queued afterwards is recorded as dropped.
  if (reporting_) reporting_->stop_workers();

  if (dispatch_thread_.joinable()) {
    dispatch_thread_.request_stop();
    dispatch_thread_.join();
  } else {
    router_->dispatch_pending();
  }
}

RouterStats System::router_stats() const { return final_stats_ ? *final_stats_ : router_->stats(); }

void System::finalize_metrics() {
  router_stats().export_to(metrics_);
  metrics_.set("frames_processed", static_cast<std::int64_t>(vision_->frames_processed()));
  metrics_.set_gauge("achieved_fps", vision_->achieved_fps());
  if (reporting_) {
    metrics_.set("reports.dispatch_context_violations",
                 static_cast<std::int64_t>(reporting_->dispatch_context_violations()));
  }
}

void System::flush_metrics() const {
  if (config_.metrics_out.empty()) return;
  if (config_.metrics_out.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(config_.metrics_out.parent_path(), ec);
  }
  std::ofstream out(config_.metrics_out, std::ios::out | std::ios::trunc);
  if (!out) throw IoError("cannot write metrics to " + config_.metrics_out.string());
  metrics_.write(out);
  if (!out) throw IoError("failed writing metrics to " + config_.metrics_out.string());
}

std::string System::status_line() const {
  std::string reporting = "reporting=disabled";
  if (reporting_) {
    reporting = fmt::format("reporting=enabled model={} pending_reports={} in_flight={} delivered={} timeouts={} dropped={}",
                            reporting_->model(), reporting_->pending(), reporting_->in_flight(),
                            metrics_.counter("reports.delivered"), metrics_.counter("reports.timeout"),
                            metrics_.counter("reports.dropped"));
  }
  return fmt::format("status: vision={} frames={} achieved_fps={:.2f} triggers={} {} channel={}",
                     vision_->running() ? "running" : "stopped", vision_->frames_processed(),
                     vision_->achieved_fps(), metrics_.counter("vision.triggers"), reporting,
                     adapter_->descriptor());
}

std::unique_ptr<System> bootstrap(RunConfig config, Clock &clock, SystemParts parts) {
  return std::make_unique<System>(std::move(config), clock, std::move(parts));
}

}  // namespace edgewatch
