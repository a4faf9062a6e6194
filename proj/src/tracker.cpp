#include "edgewatch/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "edgewatch/errors.hpp"

namespace edgewatch {

double iou(const BBox &a, const BBox &b) noexcept {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

const Track *TrackerState::find(TrackId id) const {
  auto it = std::find_if(tracks.begin(), tracks.end(), [&](const Track &t) { return t.id == id; });
  return it == tracks.end() ? nullptr : &*it;
}

void TrackerConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("tracker.theta", "must be in (0, 1)");
  if (l_max < 1) throw ValidationError("tracker.l_max", "must be >= 1");
  if (!(dwell_seconds > 0.0)) throw ValidationError("tracker.dwell", "must be > 0");
  if (!(cooldown_seconds >= 0.0)) throw ValidationError("tracker.cooldown", "must be >= 0");
}

std::vector<TrackMatch> passive_tracker_update(TrackerState &state, const Detections &detections,
                                               const TrackerConfig &cfg, TimePoint now) {
  std::vector<TrackMatch> matches;
  std::vector<Track> next;
  next.reserve(state.tracks.size() + detections.size());
  std::vector<bool> used(detections.size(), false);

  for (auto &track : state.tracks) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < detections.size(); ++j) {
      if (used[j]) continue;
      const double score = iou(track.box, detections[j].box);
      if (score > best_iou) {
        best_iou = score;
        best = j;
      }
    }
    if (best && best_iou > cfg.theta) {
      Track matched = track;
      matched.box = detections[*best].box;
      matched.lost_count = 0;
      matched.last_matched = now;
      used[*best] = true;
      matches.emplace_back(track.id, detections[*best]);
      next.push_back(std::move(matched));
    } else {
      ++track.lost_count;
      if (track.lost_count < cfg.l_max) next.push_back(track);
    }
  }

  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (used[j]) continue;
    Track fresh;
    fresh.id = ++state.next_id;
    fresh.box = detections[j].box;
    fresh.label = detections[j].label;
    fresh.first_seen = now;
    fresh.last_matched = now;
    next.push_back(std::move(fresh));
  }

  state.tracks = std::move(next);
  return matches;
}

std::vector<TrackId> evaluate_triggers(TrackerState &state, const TrackerConfig &cfg,
                                       TimePoint now) {
  // Whole milliseconds, matching timestamp precision.
  const auto dwell = Millis{std::llround(cfg.dwell_seconds * 1000.0)};
  const auto cooldown = Millis{std::llround(cfg.cooldown_seconds * 1000.0)};
  std::vector<TrackId> fired;
  for (auto &track : state.tracks) {
    if (track.lost_count != 0) continue;
    if (!cfg.target_labels.empty() && !cfg.target_labels.contains(track.label)) continue;
    if (now - track.first_seen < dwell) continue;
    if (track.last_reported && now - *track.last_reported < cooldown) continue;
    track.last_reported = now;
    fired.push_back(track.id);
  }
  return fired;
}

}  // namespace edgewatch
