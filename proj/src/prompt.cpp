#include "edgewatch/prompt.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

#include "edgewatch/clock.hpp"

namespace edgewatch {

namespace {

constexpr std::string_view kLead = "You are a surveillance reporting assistant. At ";
constexpr std::string_view kObserved = ", the detector observed: ";
constexpr std::string_view kConfig = ". System configuration: ";
constexpr std::string_view kTail = ". Write one concise alert sentence for the operator.";
constexpr std::string_view kEllipsis = "...";

std::string shorten(const std::string &text, std::size_t max_chars) {
  if (text.size() <= max_chars) return text;
  if (max_chars <= kEllipsis.size()) return std::string(kEllipsis.substr(0, max_chars));
  return text.substr(0, max_chars - kEllipsis.size()) + std::string(kEllipsis);
}

}  // namespace

std::string format_args(const ConfigArgs &args) {
  std::string out;
  for (const auto &[key, value] : args.entries) {
    if (!out.empty()) out += "; ";
    out += key;
    out += '=';
    out += value;
  }
  return out;
}

std::string summarize_detections(const Detections &detections) {
  if (detections.empty()) return "no objects";
  struct Tally {
    std::size_t count = 0;
    double max_conf = 0.0;
  };
  std::map<std::string, Tally> tallies;
  for (const auto &d : detections) {
    auto &t = tallies[d.label];
    ++t.count;
    t.max_conf = std::max(t.max_conf, d.confidence);
  }
  std::string out;
  for (const auto &[label, t] : tallies) {
    if (!out.empty()) out += ", ";
    out += fmt::format("{} x{} (max conf {:.2f})", label, t.count, t.max_conf);
  }
  return out;
}

std::string build_prompt(const std::string & /*path*/, const Detections &detections,
                         TimePoint timestamp, const std::string &args_str, std::size_t max_chars) {
  const auto ts = format_iso8601(timestamp);
  auto summary = summarize_detections(detections);
  auto args = args_str;
  const std::size_t fixed =
      kLead.size() + ts.size() + kObserved.size() + kConfig.size() + kTail.size();
  if (fixed + summary.size() + args.size() > max_chars) {
    const std::size_t budget = max_chars > fixed ? max_chars - fixed : 0;
    // Args give way first; the summary keeps at least half of the budget.
    const std::size_t args_room = budget >= summary.size() ? budget - summary.size() : budget / 2;
    args = shorten(args, std::min(args.size(), args_room));
    summary = shorten(summary, budget - args.size());
  }
  std::string prompt;
  prompt.reserve(fixed + summary.size() + args.size());
  prompt.append(kLead).append(ts).append(kObserved).append(summary).append(kConfig).append(args).append(kTail);
  return prompt;
}

std::string mock_caption(const std::string &prompt) {
  auto lead = prompt.find(kLead);
  auto observed = prompt.find(kObserved);
  auto config = prompt.find(kConfig);
  if (lead == 0 && observed != std::string::npos && config != std::string::npos && observed < config) {
    auto ts = prompt.substr(kLead.size(), observed - kLead.size());
    auto summary = prompt.substr(observed + kObserved.size(), config - observed - kObserved.size());
    return "ALERT: " + summary + " at " + ts;
  }
  // FNV-1a digest for prompts that do not follow the template.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("ALERT: {:016x}", h);
}

}  // namespace edgewatch
