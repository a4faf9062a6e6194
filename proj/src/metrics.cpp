#include "edgewatch/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace edgewatch {

Quantiles compute_quantiles(std::vector<std::int64_t> samples) {
  Quantiles q;
  q.count = samples.size();
  if (samples.empty()) return q;
  std::sort(samples.begin(), samples.end());
  auto rank = [&](double p) {
    auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
    idx = std::clamp<std::size_t>(idx, 1, samples.size());
    return samples[idx - 1];
  };
  q.p50 = rank(0.50);
  q.p95 = rank(0.95);
  q.max = samples.back();
  return q;
}

void MetricsSink::add(std::string_view counter, std::int64_t delta) {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(counter);
  if (it == counters_.end()) {
    counters_.emplace(std::string(counter), delta);
  } else {
    it->second += delta;
  }
}

void MetricsSink::set(std::string_view counter, std::int64_t value) {
  std::lock_guard lock(mutex_);
  counters_.insert_or_assign(std::string(counter), value);
}

void MetricsSink::set_gauge(std::string_view gauge, double value) {
  std::lock_guard lock(mutex_);
  gauges_.insert_or_assign(std::string(gauge), value);
}

void MetricsSink::record_latency(std::string_view series, std::int64_t value) {
  std::lock_guard lock(mutex_);
  auto it = series_.find(series);
  if (it == series_.end()) it = series_.emplace(std::string(series), std::vector<std::int64_t>{}).first;
  it->second.push_back(value);
}

void MetricsSink::append_record(std::string line) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(line));
}

std::int64_t MetricsSink::counter(std::string_view key) const {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(key);
  return it == counters_.end() ? 0 : it->second;
}

Quantiles MetricsSink::latency(std::string_view series) const {
  std::vector<std::int64_t> copy;
  {
    std::lock_guard lock(mutex_);
    auto it = series_.find(series);
    if (it != series_.end()) copy = it->second;
  }
  return compute_quantiles(std::move(copy));
}

std::vector<std::string> MetricsSink::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::map<std::string, std::string> MetricsSink::summary() const {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::string> out;
  for (const auto &[key, value] : counters_) out[key] = std::to_string(value);
  for (const auto &[key, value] : gauges_) out[key] = fmt::format("{:.3f}", value);
  for (const auto &[key, samples] : series_) {
    auto q = compute_quantiles(samples);
    out[key + ".count"] = std::to_string(q.count);
    out[key + ".p50"] = std::to_string(q.p50);
    out[key + ".p95"] = std::to_string(q.p95);
    out[key + ".max"] = std::to_string(q.max);
  }
  return out;
}

void MetricsSink::write(std::ostream &out) const {
  for (const auto &line : records()) out << "record " << line << '\n';
  out << "[summary]\n";
  for (const auto &[key, value] : summary()) out << key << '=' << value << '\n';
}

std::string MetricsSink::to_string() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

}  // namespace edgewatch
