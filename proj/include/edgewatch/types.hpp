#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace edgewatch {

using Millis = std::chrono::milliseconds;
using TimePoint = std::chrono::sys_time<Millis>;

/// Axis-aligned box in pixel coordinates, x1 <= x2 and y1 <= y2.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept { return x1 <= x2 && y1 <= y2; }

  friend bool operator==(const BBox &, const BBox &) = default;
};

struct Detection {
  BBox box;
  std::string label;
  double confidence = 0.0;

  bool valid() const noexcept {
    return box.valid() && !label.empty() && confidence >= 0.0 && confidence <= 1.0;
  }

  friend bool operator==(const Detection &, const Detection &) = default;
};

using Detections = std::vector<Detection>;

/// Path of a file written by the run (snapshots). Kept distinct from plain text payloads.
struct FilePath {
  std::string value;

  friend bool operator==(const FilePath &, const FilePath &) = default;
};

/// Run-configuration entries forwarded to the reporting prompt.
struct ConfigArgs {
  std::map<std::string, std::string> entries;

  friend bool operator==(const ConfigArgs &, const ConfigArgs &) = default;
};

}  // namespace edgewatch
