#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgewatch/types.hpp"

namespace edgewatch {

struct Frame {
  std::int64_t index = 0;
  TimePoint timestamp{};
  int width = 640;
  int height = 480;
  /// Packed BGR8 rows, width*height*3 bytes. Absent for detection-only replay.
  std::optional<std::vector<std::uint8_t>> pixels;
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;

  /// Boxes are clipped to the frame.
  virtual Detections detect(const Frame &frame) = 0;
  virtual std::string descriptor() const = 0;
};

BBox clip_to_frame(const BBox &box, int width, int height) noexcept;

/// One line of a detections replay file.
struct ReplayRecord {
  std::int64_t frame = 0;
  std::int64_t timestamp_ms = 0;
  Detections detections;
};

/// Parses `frame=<n> ts=<ms> [label:conf:x1:y1:x2:y2 ...]` lines; `#` starts a
/// comment line. Throws ParseError carrying the 1-based line number.
std::vector<ReplayRecord> parse_replay(std::istream &in);
std::string format_replay_line(const ReplayRecord &record);

class ReplayBackend final : public DetectorBackend {
 public:
  explicit ReplayBackend(std::vector<ReplayRecord> records);
  static std::unique_ptr<ReplayBackend> from_file(const std::filesystem::path &path);

  Detections detect(const Frame &frame) override;
  std::string descriptor() const override { return "replay"; }
  std::size_t frame_count() const noexcept { return records_.size(); }

 private:
  std::map<std::int64_t, Detections> records_;
};

struct Trajectory {
  std::string label;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;
  BBox box;
  double vx = 0.0;
  double vy = 0.0;
  double confidence = 0.9;
};

struct SyntheticScript {
  std::vector<Trajectory> trajectories;
  /// Per-detection probability of being dropped in a given frame.
  double dropout = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidScript.
  void validate() const;
};

/// Reads the flat `object.<name>.<field> = value` script format.
SyntheticScript load_synthetic_script(const std::filesystem::path &path);
SyntheticScript parse_synthetic_script(std::string_view text);

/// Objects moving linearly per frame. Dropout decisions are a pure function
/// of (seed, frame index, object index), so replays are reproducible.
class SyntheticBackend final : public DetectorBackend {
 public:
  explicit SyntheticBackend(SyntheticScript script);

  Detections detect(const Frame &frame) override;
  std::string descriptor() const override { return "synthetic"; }

 private:
  SyntheticScript script_;
};

}  // namespace edgewatch
