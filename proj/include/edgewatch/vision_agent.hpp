#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "edgewatch/detector.hpp"
#include "edgewatch/metrics.hpp"
#include "edgewatch/router.hpp"
#include "edgewatch/tracker.hpp"

namespace edgewatch {

struct VisionOptions {
  TrackerConfig tracker;
  double conf_threshold = 0.25;
  double frame_rate = 10.0;
  int width = 640;
  int height = 480;
  bool preview = false;
  std::filesystem::path snapshot_dir = "snapshots";
  /// Reported in snapshot args; the reporting agent owns the actual model choice.
  std::string llm_model;
};

/// Snapshot payload args: the configuration in force when the trigger fired.
ConfigArgs vision_args(const VisionOptions &options, const std::string &detector);

class VisionAgent {
 public:
  static constexpr const char *kName = "vision";

  VisionAgent(Router &router, std::unique_ptr<DetectorBackend> backend, VisionOptions options,
              MetricsSink &metrics);

  /// Registers with the router and subscribes to command/shutdown (inline).
  void attach();

  /// Applies commands received since the last frame, then processes the frame
  /// if the agent is running. Returns the number of snapshot events published.
  std::size_t tick(const Frame &frame);

  /// detect -> filter -> track -> trigger -> snapshot + publish.
  std::size_t process_frame(const Frame &frame);

  /// Frame loop paced by the router clock; used by the daemon.
  void run_loop(std::stop_token stop);

  void start();
  void stop();
  bool running() const noexcept { return running_.load(); }

  Frame make_frame(std::int64_t index, TimePoint timestamp) const;
  double achieved_fps() const;
  std::uint64_t frames_processed() const noexcept { return frames_processed_.load(); }
  TrackerState tracker_state() const;
  VisionOptions options() const;
  const AgentId &id() const noexcept { return id_; }

 private:
  void on_event(const Event &event);
  void apply_pending();
  void apply_configure(const Event &event);

  Router &router_;
  std::unique_ptr<DetectorBackend> backend_;
  MetricsSink &metrics_;
  AgentId id_{kName};

  mutable std::mutex state_mutex_;
  VisionOptions options_;
  TrackerState state_;

  std::mutex pending_mutex_;
  std::vector<Event> pending_;

  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> frames_processed_{0};
  std::optional<TimePoint> first_frame_;
  std::optional<TimePoint> last_frame_;
};

}  // namespace edgewatch
