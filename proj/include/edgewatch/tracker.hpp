#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "edgewatch/types.hpp"

namespace edgewatch {

/// Intersection over union; 0 when the union is empty.
double iou(const BBox &a, const BBox &b) noexcept;

using TrackId = std::uint64_t;

struct Track {
  TrackId id = 0;
  BBox box;
  std::string label;
  int lost_count = 0;
  TimePoint first_seen{};
  TimePoint last_matched{};
  std::optional<TimePoint> last_reported;

  friend bool operator==(const Track &, const Track &) = default;
};

struct TrackerState {
  /// Creation order, which is also ascending id order.
  std::vector<Track> tracks;
  /// Last id issued; the next track gets next_id + 1.
  TrackId next_id = 0;

  const Track *find(TrackId id) const;
};

struct TrackerConfig {
  double theta = 0.3;
  int l_max = 10;
  double dwell_seconds = 5.0;
  double cooldown_seconds = 30.0;
  std::set<std::string> target_labels;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

using TrackMatch = std::pair<TrackId, Detection>;

/// Greedy IoU association of one frame's detections to the existing tracks.
///
/// Tracks are visited in creation order; each takes the best still-unused
/// detection (lowest index on ties) if its IoU exceeds theta, otherwise its
/// lost counter grows and it is evicted once the counter reaches l_max.
/// Unused detections open new tracks, which are not part of the returned
/// matches. Matching is label-agnostic; a track keeps its creation label.
std::vector<TrackMatch> passive_tracker_update(TrackerState &state, const Detections &detections,
                                               const TrackerConfig &cfg, TimePoint now);

/// Ids of tracks that are currently matched, of a target label, have dwelt at
/// least dwell_seconds and are out of cooldown. Marks them reported at now.
std::vector<TrackId> evaluate_triggers(TrackerState &state, const TrackerConfig &cfg,
                                       TimePoint now);

}  // namespace edgewatch
