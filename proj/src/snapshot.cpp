#include "edgewatch/snapshot.hpp"

#include <fmt/format.h>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "edgewatch/errors.hpp"

namespace edgewatch {

std::string snapshot_filename(std::int64_t frame_index, TrackId track) {
  return fmt::format("snap_{}_{}.png", frame_index, track);
}

namespace {

cv::Rect to_rect(const BBox &b) {
  return cv::Rect(cv::Point(static_cast<int>(b.x1), static_cast<int>(b.y1)),
                  cv::Point(static_cast<int>(b.x2), static_cast<int>(b.y2)));
}

void put_label(cv::Mat &img, const std::string &text, cv::Point origin, const cv::Scalar &color) {
  origin.y = std::max(origin.y, 12);
  cv::putText(img, text, origin, cv::FONT_HERSHEY_SIMPLEX, 0.4, color, 1, cv::LINE_AA);
}

}  // namespace

std::filesystem::path save_snapshot(const std::filesystem::path &dir, const Frame &frame,
                                    const Detections &detections, const TrackerState &tracks,
                                    TrackId trigger) {
  if (frame.width <= 0 || frame.height <= 0) throw IoError("frame has no size");
  cv::Mat img;
  if (frame.pixels) {
    const auto expected = static_cast<std::size_t>(frame.width) * frame.height * 3;
    if (frame.pixels->size() != expected) throw IoError("pixel buffer size mismatch");
    img = cv::Mat(frame.height, frame.width, CV_8UC3,
                  const_cast<std::uint8_t *>(frame.pixels->data()))
              .clone();
  } else {
    img = cv::Mat(frame.height, frame.width, CV_8UC3, cv::Scalar(32, 32, 32));
  }

  const cv::Scalar detection_color(0, 200, 0);
  const cv::Scalar track_color(200, 160, 0);
  const cv::Scalar trigger_color(0, 0, 255);

  for (const auto &d : detections) {
    auto rect = to_rect(d.box);
    cv::rectangle(img, rect, detection_color, 1);
    put_label(img, fmt::format("{} {:.2f}", d.label, d.confidence),
              cv::Point(rect.x, rect.y + rect.height + 12), detection_color);
  }
  for (const auto &t : tracks.tracks) {
    if (t.lost_count != 0) continue;
    const bool hit = t.id == trigger;
    auto rect = to_rect(t.box);
    cv::rectangle(img, rect, hit ? trigger_color : track_color, hit ? 2 : 1);
    put_label(img, fmt::format("#{} {}", t.id, t.label), cv::Point(rect.x, rect.y - 3),
              hit ? trigger_color : track_color);
  }

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto path = dir / snapshot_filename(frame.index, trigger);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), img);
  } catch (const cv::Exception &e) {
    throw IoError("snapshot write failed: " + std::string(e.what()));
  }
  if (!ok) throw IoError("snapshot write failed: " + path.string());
  return path;
}

}  // namespace edgewatch
