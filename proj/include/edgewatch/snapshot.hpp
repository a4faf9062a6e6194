#pragma once

#include <filesystem>

#include "edgewatch/detector.hpp"
#include "edgewatch/tracker.hpp"

namespace edgewatch {

/// `snap_<frameindex>_<trackid>.png`
std::string snapshot_filename(std::int64_t frame_index, TrackId track);

/// Writes an annotated PNG (detections with label and confidence, live tracks
/// with their ids, the triggering track highlighted). Frames without pixel
/// data get a blank canvas of the frame's size. Throws IoError.
std::filesystem::path save_snapshot(const std::filesystem::path &dir, const Frame &frame,
                                    const Detections &detections, const TrackerState &tracks,
                                    TrackId trigger);

}  // namespace edgewatch
