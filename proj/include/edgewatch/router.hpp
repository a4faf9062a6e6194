#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <shared_mutex>
#include <stop_token>
#include <string>
#include <vector>

#include "edgewatch/bounded_queue.hpp"
#include "edgewatch/clock.hpp"
#include "edgewatch/event.hpp"
#include "edgewatch/metrics.hpp"

namespace edgewatch {

enum class DeliveryMode { kInline, kBackground };

struct Subscription {
  AgentId agent;
  std::string event_type;
  DeliveryMode mode = DeliveryMode::kInline;
};

using EventHandler = std::function<void(const Event &)>;

/// Per-agent bounded work queue for background deliveries (drop-oldest).
using Mailbox = BoundedQueue<EventPtr>;

struct AgentOptions {
  /// 0 selects RouterOptions::mailbox_capacity.
  std::size_t mailbox_capacity = 0;
  /// Called on the dispatch context for every event evicted from the agent's mailbox.
  EventHandler on_drop;
};

struct RouterOptions {
  std::size_t queue_capacity = 1024;
  std::size_t mailbox_capacity = 16;
  /// When set, FilePath payload values must resolve under this directory.
  std::filesystem::path snapshot_root;
  /// One structured line per dispatched event; not owned.
  std::ostream *log = nullptr;
};

struct EventTypeStats {
  std::uint64_t published = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t handler_errors = 0;
  std::uint64_t unconsumed = 0;
};

struct RouterStats {
  std::map<std::string, EventTypeStats> by_type;
  std::uint64_t rejected = 0;
  std::uint64_t handler_errors = 0;
  std::uint64_t dispatched = 0;
  /// Enqueue-to-handoff latency per dispatched event, microseconds.
  std::vector<std::int64_t> dispatch_latency_us;

  void export_to(MetricsSink &sink) const;
};

/// In-process publish/subscribe router. Events get a single total order (seq)
/// at publish time; inline subscribers run on the dispatch context in that
/// order, background subscribers receive them through their own mailbox.
class Router {
 public:
  Router(Clock &clock, RouterOptions options = {});
  ~Router();

  Router(const Router &) = delete;
  Router &operator=(const Router &) = delete;

  AgentId register_agent(const std::string &name, EventHandler handler,
                         AgentOptions options = {});
  Subscription subscribe(const AgentId &agent, const std::string &event_type, DeliveryMode mode);

  /// Builds an unpublished event stamped with the current time.
  Event make_event(const std::string &event_type, Payload payload = {}) const;

  /// Enqueue-and-return. target "router" fans out to all subscribers of the
  /// event type; any other target must be a registered agent. Returns the seq.
  std::uint64_t send_to_agent(const AgentId &from, const std::string &target, Event event);

  /// Processes every event queued at call time plus any enqueued while
  /// draining. Returns the number of events dispatched.
  std::size_t dispatch_pending();

  /// Dispatch loop for threaded mode. Returns when stop is requested; events
  /// still queued at that point are dispatched before returning.
  RouterStats run_dispatch(std::stop_token stop);

  Mailbox &mailbox(const AgentId &agent);
  bool has_subscription(const AgentId &agent, const std::string &event_type) const;
  std::vector<Subscription> subscriptions() const;
  bool is_registered(const std::string &name) const;
  bool is_event_type(const std::string &event_type) const;
  std::size_t queued() const;

  /// True when called from inside this router's dispatch (any handler or drop callback).
  bool on_dispatch_context() const noexcept;

  RouterStats stats() const;
  Clock &clock() const noexcept { return clock_; }
  const RouterOptions &options() const noexcept { return options_; }

 private:
  struct AgentEntry {
    AgentId id;
    EventHandler handler;
    EventHandler on_drop;
    std::size_t mailbox_capacity = 0;
    std::unique_ptr<Mailbox> mailbox;
  };

  struct QueuedEvent {
    EventPtr event;
    std::string target;  // empty = fan out
    std::chrono::nanoseconds enqueued{};
  };

  enum class Outcome { kDelivered, kDropped, kHandlerError };

  void validate_payload(const Payload &payload) const;
  void dispatch_one(QueuedEvent &entry);
  bool deliver(AgentEntry &agent, DeliveryMode mode, const EventPtr &event, EventTypeStats &stats);
  void log_line(const Event &event, std::int64_t latency_us, Outcome outcome);

  Clock &clock_;
  const RouterOptions options_;
  const std::set<std::string, std::less<>> event_types_;

  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<AgentEntry>, std::less<>> agents_;
  std::vector<Subscription> subscriptions_;

  std::mutex publish_mutex_;
  std::uint64_t next_seq_ = 1;
  BoundedQueue<QueuedEvent> queue_;

  mutable std::mutex stats_mutex_;
  RouterStats stats_;
  std::mutex dispatch_mutex_;
};

}  // namespace edgewatch
