#include "edgewatch/clock.hpp"

#include <fmt/format.h>

#include <thread>

namespace edgewatch {

TimePoint SystemClock::now() const {
  return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

std::chrono::nanoseconds SystemClock::monotonic() const {
  return std::chrono::steady_clock::now().time_since_epoch();
}

void SystemClock::sleep_for(std::chrono::nanoseconds duration) {
  if (duration.count() > 0) std::this_thread::sleep_for(duration);
}

SimulatedClock::SimulatedClock(TimePoint start)
    : start_(start), now_ms_(start.time_since_epoch().count()) {}

TimePoint SimulatedClock::now() const {
  return TimePoint{Millis{now_ms_.load(std::memory_order_acquire)}};
}

std::chrono::nanoseconds SimulatedClock::monotonic() const {
  return now() - start_;
}

void SimulatedClock::advance_to(TimePoint t) {
  auto target = t.time_since_epoch().count();
  auto current = now_ms_.load(std::memory_order_acquire);
  while (target > current &&
         !now_ms_.compare_exchange_weak(current, target, std::memory_order_acq_rel)) {
  }
}

std::string format_iso8601(TimePoint t) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(t);
  const year_month_day ymd{days};
  const hh_mm_ss hms{t - days};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", int(ymd.year()),
                     unsigned(ymd.month()), unsigned(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count(), hms.subseconds().count());
}

}  // namespace edgewatch
