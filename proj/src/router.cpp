#include "edgewatch/router.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <exception>

#include "edgewatch/errors.hpp"

namespace edgewatch {

namespace {

constexpr std::size_t kMaxLatencySamples = 1u << 20;

thread_local const Router *t_dispatching = nullptr;

struct DispatchScope {
  explicit DispatchScope(const Router *router) : previous(t_dispatching) { t_dispatching = router; }
  ~DispatchScope() { t_dispatching = previous; }
  const Router *previous;
};

bool path_within(const std::filesystem::path &root, const std::filesystem::path &candidate) {
  // Both sides are taken relative to the working directory, which is where
  // the vision agent writes snapshots.
  auto normal_root = std::filesystem::absolute(root).lexically_normal();
  auto normal = std::filesystem::absolute(candidate).lexically_normal();
  auto rel = normal.lexically_relative(normal_root);
  return !rel.empty() && *rel.begin() != ".." && *rel.begin() != ".";
}

std::string_view outcome_name(int outcome) {
  switch (outcome) {
    case 0:
      return "delivered";
    case 1:
      return "dropped";
    default:
      return "handler_error";
  }
}

}  // namespace

void RouterStats::export_to(MetricsSink &sink) const {
  for (const auto &[type, s] : by_type) {
    sink.set("events." + type + ".published", static_cast<std::int64_t>(s.published));
    sink.set("events." + type + ".delivered", static_cast<std::int64_t>(s.delivered));
    sink.set("events." + type + ".dropped", static_cast<std::int64_t>(s.dropped));
    sink.set("events." + type + ".handler_errors", static_cast<std::int64_t>(s.handler_errors));
    sink.set("events." + type + ".unconsumed", static_cast<std::int64_t>(s.unconsumed));
  }
  sink.set("router.rejected", static_cast<std::int64_t>(rejected));
  sink.set("router.handler_errors", static_cast<std::int64_t>(handler_errors));
  sink.set("router.dispatched", static_cast<std::int64_t>(dispatched));
  for (auto us : dispatch_latency_us) sink.record_latency("dispatch_latency_us", us);
}

Router::Router(Clock &clock, RouterOptions options)
    : clock_(clock),
      options_(std::move(options)),
      event_types_{std::string(event_type::kCommand), std::string(event_type::kStatus),
                   std::string(event_type::kSnapshot), std::string(event_type::kReport),
                   std::string(event_type::kShutdown)},
      queue_(options_.queue_capacity) {
  for (const auto &type : event_types_) stats_.by_type[type];
}

Router::~Router() {
  queue_.close();
  std::shared_lock lock(registry_mutex_);
  for (auto &[name, agent] : agents_) {
    if (agent->mailbox) agent->mailbox->close();
  }
}

AgentId Router::register_agent(const std::string &name, EventHandler handler, AgentOptions options) {
  if (name.empty()) throw ValidationError("agent.name", "must be non-empty");
  std::unique_lock lock(registry_mutex_);
  if (name == kRouterName || agents_.contains(name)) throw DuplicateAgent(name);
  auto entry = std::make_unique<AgentEntry>();
  entry->id = AgentId{name};
  entry->handler = std::move(handler);
  entry->on_drop = std::move(options.on_drop);
  entry->mailbox_capacity =
      options.mailbox_capacity == 0 ? options_.mailbox_capacity : options.mailbox_capacity;
  agents_.emplace(name, std::move(entry));
  return AgentId{name};
}

Subscription Router::subscribe(const AgentId &agent, const std::string &event_type,
                               DeliveryMode mode) {
  std::unique_lock lock(registry_mutex_);
  auto it = agents_.find(agent.name);
  if (it == agents_.end()) throw UnknownAgent(agent.name);
  if (!event_types_.contains(event_type)) throw UnknownEventType(event_type);
  for (const auto &sub : subscriptions_) {
    if (sub.agent == agent && sub.event_type == event_type) {
      throw DuplicateSubscription(agent.name, event_type);
    }
  }
  if (mode == DeliveryMode::kBackground && !it->second->mailbox) {
    it->second->mailbox = std::make_unique<Mailbox>(it->second->mailbox_capacity);
  }
  subscriptions_.push_back(Subscription{agent, event_type, mode});
  return subscriptions_.back();
}

void Router::validate_payload(const Payload &payload) const {
  for (const auto &[key, value] : payload) {
    if (key.empty()) throw InvalidPayloadValue(key, "empty key");
    if (const auto *path = std::get_if<FilePath>(&value)) {
      if (path->value.empty()) throw InvalidPayloadValue(key, "empty path");
      std::filesystem::path p(path->value);
      if (!options_.snapshot_root.empty()) {
        if (!path_within(options_.snapshot_root, p)) {
          throw InvalidPayloadValue(key, "path escapes snapshot directory: " + path->value);
        }
      } else {
        auto normal = p.lexically_normal();
        if (normal.is_absolute() || (!normal.empty() && *normal.begin() == "..")) {
          throw InvalidPayloadValue(key, "path escapes snapshot directory: " + path->value);
        }
      }
    } else if (const auto *dets = std::get_if<Detections>(&value)) {
      for (const auto &d : *dets) {
        if (!d.valid()) throw InvalidPayloadValue(key, "invalid detection");
      }
    }
  }
}

Event Router::make_event(const std::string &event_type, Payload payload) const {
  if (!event_types_.contains(event_type)) throw UnknownEventType(event_type);
  validate_payload(payload);
  Event event;
  event.type = event_type;
  event.timestamp = clock_.now();
  event.payload = std::move(payload);
  return event;
}

std::uint64_t Router::send_to_agent(const AgentId &from, const std::string &target, Event event) {
  if (!event_types_.contains(event.type)) throw UnknownEventType(event.type);
  const bool fanout = target == kRouterName;
  if (!fanout && !is_registered(target)) throw UnknownAgent(target);
  if (from.name != kRouterName && !is_registered(from.name)) throw UnknownAgent(from.name);

  std::lock_guard lock(publish_mutex_);
  if (queue_.size() >= queue_.capacity()) {
    std::lock_guard stats_lock(stats_mutex_);
    ++stats_.rejected;
    throw QueueFull(queue_.capacity());
  }
  auto seq = next_seq_;
  event.seq = seq;
  event.source = from;
  auto type = event.type;
  QueuedEvent entry{std::make_shared<const Event>(std::move(event)), fanout ? std::string{} : target,
                    clock_.monotonic()};
  if (!queue_.try_push(entry)) {
    std::lock_guard stats_lock(stats_mutex_);
    ++stats_.rejected;
    throw QueueFull(queue_.capacity());
  }
  ++next_seq_;
  {
    std::lock_guard stats_lock(stats_mutex_);
    ++stats_.by_type[type].published;
  }
  return seq;
}

bool Router::deliver(AgentEntry &agent, DeliveryMode mode, const EventPtr &event,
                     EventTypeStats &stats) {
  if (mode == DeliveryMode::kInline) {
    try {
      if (agent.handler) agent.handler(*event);
      ++stats.delivered;
      return true;
    } catch (const std::exception &) {
    } catch (...) {
    }
    ++stats.handler_errors;
    return false;
  }
  auto evicted = agent.mailbox->push_evict(event);
  ++stats.delivered;
  if (evicted) {
    const auto &old = **evicted;
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.by_type[old.type].dropped;
    }
    log_line(old, 0, Outcome::kDropped);
    if (agent.on_drop) {
      try {
        agent.on_drop(old);
      } catch (...) {
        std::lock_guard lock(stats_mutex_);
        ++stats_.handler_errors;
      }
    }
  }
  return true;
}

void Router::dispatch_one(QueuedEvent &entry) {
  const auto &event = entry.event;
  std::vector<std::pair<AgentEntry *, DeliveryMode>> recipients;
  {
    std::shared_lock lock(registry_mutex_);
    if (entry.target.empty()) {
      for (const auto &sub : subscriptions_) {
        if (sub.event_type != event->type) continue;
        recipients.emplace_back(agents_.find(sub.agent.name)->second.get(), sub.mode);
      }
    } else {
      auto agent = agents_.find(entry.target);
      if (agent != agents_.end()) {
        auto mode = DeliveryMode::kInline;
        for (const auto &sub : subscriptions_) {
          if (sub.agent.name == entry.target && sub.event_type == event->type) mode = sub.mode;
        }
        if (mode == DeliveryMode::kBackground && !agent->second->mailbox) mode = DeliveryMode::kInline;
        recipients.emplace_back(agent->second.get(), mode);
      }
    }
  }

  EventTypeStats local;
  bool failed = false;
  for (auto &[agent, mode] : recipients) {
    if (!deliver(*agent, mode, event, local)) failed = true;
  }

  const auto latency_us =
      std::chrono::duration_cast<std::chrono::microseconds>(clock_.monotonic() - entry.enqueued)
          .count();
  {
    std::lock_guard lock(stats_mutex_);
    auto &s = stats_.by_type[event->type];
    s.delivered += local.delivered;
    s.handler_errors += local.handler_errors;
    stats_.handler_errors += local.handler_errors;
    if (recipients.empty()) ++s.unconsumed;
    ++stats_.dispatched;
    if (stats_.dispatch_latency_us.size() < kMaxLatencySamples) {
      stats_.dispatch_latency_us.push_back(latency_us);
    } else {
      stats_.dispatch_latency_us[stats_.dispatched % kMaxLatencySamples] = latency_us;
    }
  }
  Outcome outcome = failed ? Outcome::kHandlerError
                           : (recipients.empty() ? Outcome::kDropped : Outcome::kDelivered);
  log_line(*event, latency_us, outcome);
}

void Router::log_line(const Event &event, std::int64_t latency_us, Outcome outcome) {
  if (options_.log == nullptr) return;
  *options_.log << fmt::format("ts={} seq={} type={} source={} latency_us={} outcome={}\n",
                               format_iso8601(event.timestamp), event.seq, event.type,
                               event.source.name, latency_us,
                               outcome_name(static_cast<int>(outcome)));
}

std::size_t Router::dispatch_pending() {
  std::lock_guard dispatch_lock(dispatch_mutex_);
  DispatchScope scope(this);
  std::size_t count = 0;
  while (auto entry = queue_.try_pop()) {
    dispatch_one(*entry);
    ++count;
  }
  return count;
}

RouterStats Router::run_dispatch(std::stop_token stop) {
  while (!stop.stop_requested()) {
    auto entry = queue_.wait_pop(stop);
    if (!entry) continue;
    std::lock_guard dispatch_lock(dispatch_mutex_);
    DispatchScope scope(this);
    dispatch_one(*entry);
  }
  dispatch_pending();
  return stats();
}

Mailbox &Router::mailbox(const AgentId &agent) {
  std::shared_lock lock(registry_mutex_);
  auto it = agents_.find(agent.name);
  if (it == agents_.end()) throw UnknownAgent(agent.name);
  if (!it->second->mailbox) throw Error("agent has no background subscription: " + agent.name);
  return *it->second->mailbox;
}

bool Router::has_subscription(const AgentId &agent, const std::string &event_type) const {
  std::shared_lock lock(registry_mutex_);
  return std::any_of(subscriptions_.begin(), subscriptions_.end(), [&](const Subscription &s) {
    return s.agent == agent && s.event_type == event_type;
  });
}

std::vector<Subscription> Router::subscriptions() const {
  std::shared_lock lock(registry_mutex_);
  return subscriptions_;
}

bool Router::is_registered(const std::string &name) const {
  std::shared_lock lock(registry_mutex_);
  return agents_.contains(name);
}

bool Router::is_event_type(const std::string &event_type) const {
  return event_types_.contains(event_type);
}

std::size_t Router::queued() const { return queue_.size(); }

bool Router::on_dispatch_context() const noexcept { return t_dispatching == this; }

RouterStats Router::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

}  // namespace edgewatch
