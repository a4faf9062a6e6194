#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace edgewatch {

struct Quantiles {
  std::int64_t p50 = 0;
  std::int64_t p95 = 0;
  std::int64_t max = 0;
  std::size_t count = 0;
};

/// Nearest-rank quantiles; all zero for an empty sample.
Quantiles compute_quantiles(std::vector<std::int64_t> samples);

/// Thread-safe sink for counters, gauges, latency series and per-item records.
///
/// Output format (one item per line):
///   record <free-form key=value list>      per-item records, in append order
///   [summary]
///   <key>=<value>                          all counters, gauges and quantiles, sorted by key
///
/// Latency series expand to <series>.count/.p50/.p95/.max. Gauges print with
/// three decimals, everything else as integers.
class MetricsSink {
 public:
  void add(std::string_view counter, std::int64_t delta = 1);
  void set(std::string_view counter, std::int64_t value);
  void set_gauge(std::string_view gauge, double value);
  void record_latency(std::string_view series, std::int64_t value);
  void append_record(std::string line);

  std::int64_t counter(std::string_view key) const;
  Quantiles latency(std::string_view series) const;
  std::vector<std::string> records() const;

  /// Flattened key -> rendered value view used for the summary and for scenario assertions.
  std::map<std::string, std::string> summary() const;

  void write(std::ostream &out) const;
  std::string to_string() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::int64_t, std::less<>> counters_;
  std::map<std::string, double, std::less<>> gauges_;
  std::map<std::string, std::vector<std::int64_t>, std::less<>> series_;
  std::vector<std::string> records_;
};

}  // namespace edgewatch
