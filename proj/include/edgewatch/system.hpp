#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>

#include "edgewatch/channel.hpp"
#include "edgewatch/channel_agents.hpp"
#include "edgewatch/clock.hpp"
#include "edgewatch/config.hpp"
#include "edgewatch/llm_client.hpp"
#include "edgewatch/metrics.hpp"
#include "edgewatch/reporting_agent.hpp"
#include "edgewatch/router.hpp"
#include "edgewatch/vision_agent.hpp"

namespace edgewatch {

/// Optional pre-built parts; anything left null is built from the config.
struct SystemParts {
  std::unique_ptr<ChannelAdapter> adapter;
  std::unique_ptr<LlmClient> llm;
  std::unique_ptr<DetectorBackend> backend;
};

std::unique_ptr<DetectorBackend> make_backend(const RunConfig &config);
std::unique_ptr<LlmClient> make_llm_client(const RunConfig &config, Clock &clock);
/// Throws AdapterInitError (including missing or rejected Slack credentials).
std::unique_ptr<ChannelAdapter> make_adapter(const RunConfig &config, Clock &clock);

/// A bootstrapped agent graph. Construction registers every agent and
/// subscription and starts the channel listener; the vision loop stays idle
/// until a start command unless the config asks for autostart.
///
/// Two ways to drive it: step-wise on one thread (scenario mode, simulated
/// clock) or start_threads()/shutdown() with real threads (daemon mode).
class System {
 public:
  /// Throws AdapterInitError, SnapshotDirError, ValidationError.
  System(RunConfig config, Clock &clock, SystemParts parts = {});
  ~System();

  System(const System &) = delete;
  System &operator=(const System &) = delete;

  void start_threads();
  /// Publishes "shutdown", then stops adapter, vision, reporting (in-flight
  /// work finishes, queued work is dropped) and finally the router.
  void shutdown();

  /// Publishes the "shutdown" event once; shutdown() calls it if nobody has.
  void publish_shutdown();

  /// Exports router and agent figures into the sink. Call once, after shutdown.
  void finalize_metrics();
  /// Writes the sink to config().metrics_out when set.
  void flush_metrics() const;

  std::string status_line() const;

  const RunConfig &config() const noexcept { return config_; }
  Clock &clock() const noexcept { return clock_; }
  Router &router() noexcept { return *router_; }
  MetricsSink &metrics() noexcept { return metrics_; }
  ChannelAdapter &adapter() noexcept { return *adapter_; }
  LlmClient *llm() noexcept { return llm_.get(); }
  VisionAgent &vision() noexcept { return *vision_; }
  ReportingAgent *reporting() noexcept { return reporting_.get(); }
  CommunicationAgent &communication() noexcept { return *communication_; }
  ControlAgent &control() noexcept { return *control_; }
  RouterStats router_stats() const;

 private:
  RunConfig config_;
  Clock &clock_;
  MetricsSink metrics_;
  std::ofstream router_log_;
  std::unique_ptr<Router> router_;
  std::unique_ptr<ChannelAdapter> adapter_;
  std::unique_ptr<LlmClient> llm_;
  std::unique_ptr<VisionAgent> vision_;
  std::unique_ptr<ReportingAgent> reporting_;
  std::unique_ptr<CommunicationAgent> communication_;
  std::unique_ptr<ControlAgent> control_;

  std::jthread dispatch_thread_;
  std::jthread vision_thread_;
  std::optional<RouterStats> final_stats_;
  bool shutdown_published_ = false;
  bool shut_down_ = false;
};

/// bootstrap(config): a running System handle.
std::unique_ptr<System> bootstrap(RunConfig config, Clock &clock, SystemParts parts = {});

}  // namespace edgewatch
