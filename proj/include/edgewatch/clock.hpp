#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "edgewatch/types.hpp"

namespace edgewatch {

/// Time source shared by all agents. Scenario runs swap in SimulatedClock so
/// that long LLM delays cost nothing in wall time.
class Clock {
 public:
  virtual ~Clock() = default;

  /// Wall-clock time, millisecond precision.
  virtual TimePoint now() const = 0;
  /// Monotonic reading used for latency measurements.
  virtual std::chrono::nanoseconds monotonic() const = 0;
  virtual void sleep_for(std::chrono::nanoseconds duration) = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override;
  std::chrono::nanoseconds monotonic() const override;
  void sleep_for(std::chrono::nanoseconds duration) override;
};

/// Virtual time advanced explicitly by a scenario driver. sleep_for does not
/// block and does not advance time; callers report elapsed time instead.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(TimePoint start);

  TimePoint now() const override;
  std::chrono::nanoseconds monotonic() const override;
  void sleep_for(std::chrono::nanoseconds) override {}

  void advance_to(TimePoint t);
  TimePoint start() const noexcept { return start_; }

 private:
  TimePoint start_;
  std::atomic<Millis::rep> now_ms_;
};

/// "2026-01-01T00:00:00.000Z"
std::string format_iso8601(TimePoint t);

}  // namespace edgewatch
