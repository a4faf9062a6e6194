#include "edgewatch/vision_agent.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <exception>

#include "edgewatch/errors.hpp"
#include "edgewatch/flat_config.hpp"
#include "edgewatch/snapshot.hpp"

namespace edgewatch {

ConfigArgs vision_args(const VisionOptions &options, const std::string &detector) {
  ConfigArgs args;
  std::string labels;
  for (const auto &label : options.tracker.target_labels) {
    if (!labels.empty()) labels += ',';
    labels += label;
  }
  args.entries["labels"] = labels.empty() ? "*" : labels;
  args.entries["resolution"] = fmt::format("{}x{}", options.width, options.height);
  args.entries["theta"] = fmt::format("{}", options.tracker.theta);
  args.entries["conf"] = fmt::format("{}", options.conf_threshold);
  args.entries["dwell"] = fmt::format("{}", options.tracker.dwell_seconds);
  args.entries["cooldown"] = fmt::format("{}", options.tracker.cooldown_seconds);
  args.entries["detector"] = detector;
  if (!options.llm_model.empty()) args.entries["model"] = options.llm_model;
  return args;
}

VisionAgent::VisionAgent(Router &router, std::unique_ptr<DetectorBackend> backend,
                         VisionOptions options, MetricsSink &metrics)
    : router_(router), backend_(std::move(backend)), metrics_(metrics), options_(std::move(options)) {
  options_.tracker.validate();
  if (options_.width <= 0 || options_.height <= 0) {
    throw ValidationError("vision.resolution", "must be positive");
  }
  if (!(options_.frame_rate > 0.0)) throw ValidationError("vision.frame_rate", "must be > 0");
}

void VisionAgent::attach() {
  router_.register_agent(kName, [this](const Event &e) { on_event(e); });
  router_.subscribe(id_, std::string(event_type::kCommand), DeliveryMode::kInline);
  router_.subscribe(id_, std::string(event_type::kShutdown), DeliveryMode::kInline);
}

void VisionAgent::on_event(const Event &event) {
  if (event.type == event_type::kShutdown) {
    running_ = false;
    return;
  }
  const auto *action = event.get<std::string>("action");
  if (action == nullptr) return;
  if (*action == "start") {
    running_ = true;
  } else if (*action == "stop") {
    running_ = false;
  } else if (*action == "configure") {
    std::lock_guard lock(pending_mutex_);
    pending_.push_back(event);
  }
}

void VisionAgent::start() { running_ = true; }
void VisionAgent::stop() { running_ = false; }

void VisionAgent::apply_pending() {
  std::vector<Event> pending;
  {
    std::lock_guard lock(pending_mutex_);
    pending.swap(pending_);
  }
  for (const auto &event : pending) apply_configure(event);
}

void VisionAgent::apply_configure(const Event &event) {
  std::lock_guard lock(state_mutex_);
  auto next = options_;
  for (const auto &[key, value] : event.payload) {
    const auto *text = std::get_if<std::string>(&value);
    if (text == nullptr || key == "action") continue;
    if (key == "theta") {
      next.tracker.theta = parse_double(*text).value_or(next.tracker.theta);
    } else if (key == "conf") {
      next.conf_threshold = parse_double(*text).value_or(next.conf_threshold);
    } else if (key == "dwell") {
      next.tracker.dwell_seconds = parse_double(*text).value_or(next.tracker.dwell_seconds);
    } else if (key == "cooldown") {
      next.tracker.cooldown_seconds = parse_double(*text).value_or(next.tracker.cooldown_seconds);
    } else if (key == "labels") {
      next.tracker.target_labels.clear();
      for (const auto &label : split(*text, ',')) {
        auto t = trim(label);
        if (!t.empty()) next.tracker.target_labels.emplace(t);
      }
    } else if (key == "resolution") {
      auto parts = split(*text, 'x');
      if (parts.size() == 2) {
        next.width = static_cast<int>(parse_int(parts[0]).value_or(next.width));
        next.height = static_cast<int>(parse_int(parts[1]).value_or(next.height));
      }
    } else if (key == "preview") {
      next.preview = parse_bool(*text).value_or(next.preview);
    } else if (key == "model") {
      next.llm_model = *text;
    }
  }
  try {
    next.tracker.validate();
    if (next.width <= 0 || next.height <= 0) throw ValidationError("resolution", "must be positive");
    options_ = std::move(next);
    metrics_.add("vision.reconfigured");
  } catch (const ValidationError &) {
    metrics_.add("errors.vision_config");
  }
}

Frame VisionAgent::make_frame(std::int64_t index, TimePoint timestamp) const {
  std::lock_guard lock(state_mutex_);
  Frame frame;
  frame.index = index;
  frame.timestamp = timestamp;
  frame.width = options_.width;
  frame.height = options_.height;
  return frame;
}

std::size_t VisionAgent::tick(const Frame &frame) {
  apply_pending();
  if (!running_) return 0;
  return process_frame(frame);
}

std::size_t VisionAgent::process_frame(const Frame &frame) {
  auto &clock = router_.clock();
  const auto started = clock.monotonic();

  Detections raw;
  try {
    raw = backend_->detect(frame);
  } catch (const std::exception &) {
    metrics_.add("errors.backend");
    return 0;
  }

  std::lock_guard lock(state_mutex_);
  Detections detections;
  for (auto &d : raw) {
    if (d.confidence < options_.conf_threshold) continue;
    if (!options_.tracker.target_labels.empty() && !options_.tracker.target_labels.contains(d.label)) {
      continue;
    }
    detections.push_back(std::move(d));
  }

  passive_tracker_update(state_, detections, options_.tracker, frame.timestamp);
  auto fired = evaluate_triggers(state_, options_.tracker, frame.timestamp);

  std::size_t published = 0;
  const auto args = vision_args(options_, backend_->descriptor());
  for (auto track : fired) {
    metrics_.add("vision.triggers");
    std::filesystem::path path;
    try {
      path = save_snapshot(options_.snapshot_dir, frame, detections, state_, track);
    } catch (const IoError &) {
      metrics_.add("errors.snapshot_io");
      continue;
    }
    Payload payload{{"path", FilePath{path.string()}},
                    {"detections", detections},
                    {"timestamp", static_cast<std::int64_t>(frame.timestamp.time_since_epoch().count())},
                    {"args", args}};
    try {
      auto event = router_.make_event(std::string(event_type::kSnapshot), std::move(payload));
      router_.send_to_agent(id_, std::string(kRouterName), std::move(event));
      ++published;
    } catch (const QueueFull &) {
      metrics_.add("errors.router_queue_full");
    } catch (const Error &) {
      metrics_.add("errors.snapshot_publish");
    }
  }

  ++frames_processed_;
  if (!first_frame_) first_frame_ = frame.timestamp;
  last_frame_ = frame.timestamp;
  metrics_.record_latency("frame_time_us", std::chrono::duration_cast<std::chrono::microseconds>(
                                               clock.monotonic() - started)
                                               .count());
  return published;
}

void VisionAgent::run_loop(std::stop_token stop) {
  auto &clock = router_.clock();
  const auto period = std::chrono::nanoseconds(
      static_cast<std::int64_t>(1e9 / std::max(options().frame_rate, 1e-3)));
  std::int64_t index = 0;
  auto next = clock.monotonic();
  while (!stop.stop_requested()) {
    tick(make_frame(index++, clock.now()));
    next += period;
    auto now = clock.monotonic();
    if (next > now) {
      clock.sleep_for(next - now);
    } else {
      next = now;  // running behind; don't try to catch up
    }
  }
}

double VisionAgent::achieved_fps() const {
  std::lock_guard lock(state_mutex_);
  const auto frames = frames_processed_.load();
  if (frames < 2 || !first_frame_ || !last_frame_ || *last_frame_ <= *first_frame_) return 0.0;
  const double seconds = std::chrono::duration<double>(*last_frame_ - *first_frame_).count();
  return static_cast<double>(frames - 1) / seconds;
}

TrackerState VisionAgent::tracker_state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

VisionOptions VisionAgent::options() const {
  std::lock_guard lock(state_mutex_);
  return options_;
}

}  // namespace edgewatch
