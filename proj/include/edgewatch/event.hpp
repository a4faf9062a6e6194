#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "edgewatch/types.hpp"

namespace edgewatch {

namespace event_type {
inline constexpr std::string_view kCommand = "command";
inline constexpr std::string_view kStatus = "status";
inline constexpr std::string_view kSnapshot = "snapshot";
inline constexpr std::string_view kReport = "report";
inline constexpr std::string_view kShutdown = "shutdown";
}  // namespace event_type

struct AgentId {
  std::string name;

  friend auto operator<=>(const AgentId &, const AgentId &) = default;
};

/// Reserved target/source name for the router itself.
inline constexpr std::string_view kRouterName = "router";

using PayloadValue =
    std::variant<std::string, std::int64_t, double, bool, FilePath, Detections, ConfigArgs>;
using Payload = std::map<std::string, PayloadValue>;

/// Unit of exchange between agents. seq 0 means "not yet published".
struct Event {
  std::string type;
  AgentId source;
  std::uint64_t seq = 0;
  TimePoint timestamp{};
  Payload payload;

  template <typename T>
  const T *get(const std::string &key) const {
    auto it = payload.find(key);
    if (it == payload.end()) return nullptr;
    return std::get_if<T>(&it->second);
  }
};

using EventPtr = std::shared_ptr<const Event>;

}  // namespace edgewatch
