#include "edgewatch/detector.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "edgewatch/errors.hpp"
#include "edgewatch/flat_config.hpp"

namespace edgewatch {

BBox clip_to_frame(const BBox &box, int width, int height) noexcept {
  const double w = width;
  const double h = height;
  BBox out{std::clamp(box.x1, 0.0, w), std::clamp(box.y1, 0.0, h), std::clamp(box.x2, 0.0, w),
           std::clamp(box.y2, 0.0, h)};
  return out;
}

namespace {

std::string_view next_token(std::string_view &rest) {
  rest = trim(rest);
  auto end = rest.find_first_of(" \t");
  auto token = rest.substr(0, end);
  rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
  return token;
}

std::int64_t keyed_int(std::string_view token, std::string_view key, std::size_t line) {
  if (token.substr(0, key.size()) != key || token.size() <= key.size() || token[key.size()] != '=') {
    throw ParseError(line, "expected '" + std::string(key) + "=<n>'");
  }
  auto value = parse_int(token.substr(key.size() + 1));
  if (!value) throw ParseError(line, "bad integer in '" + std::string(token) + "'");
  return *value;
}

Detection parse_detection(std::string_view token, std::size_t line) {
  auto fields = split(token, ':');
  if (fields.size() != 6) {
    throw ParseError(line, "detection must be label:conf:x1:y1:x2:y2, got '" + std::string(token) + "'");
  }
  Detection d;
  d.label = fields[0];
  if (d.label.empty()) throw ParseError(line, "empty label");
  std::optional<double> values[5];
  for (int i = 0; i < 5; ++i) {
    values[i] = parse_double(fields[i + 1]);
    if (!values[i]) throw ParseError(line, "bad number '" + fields[i + 1] + "'");
  }
  d.confidence = *values[0];
  d.box = BBox{*values[1], *values[2], *values[3], *values[4]};
  if (d.confidence < 0.0 || d.confidence > 1.0) throw ParseError(line, "confidence outside [0,1]");
  if (!d.box.valid()) throw ParseError(line, "box corners out of order");
  return d;
}

}  // namespace

std::vector<ReplayRecord> parse_replay(std::istream &in) {
  std::vector<ReplayRecord> records;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view rest = trim(raw);
    if (rest.empty() || rest.front() == '#') continue;
    ReplayRecord record;
    record.frame = keyed_int(next_token(rest), "frame", line_no);
    record.timestamp_ms = keyed_int(next_token(rest), "ts", line_no);
    if (record.frame < 0) throw ParseError(line_no, "negative frame index");
    for (auto token = next_token(rest); !token.empty(); token = next_token(rest)) {
      record.detections.push_back(parse_detection(token, line_no));
    }
    for (const auto &prev : records) {
      if (prev.frame == record.frame) throw ParseError(line_no, "duplicate frame index");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string format_replay_line(const ReplayRecord &record) {
  std::string out = fmt::format("frame={} ts={}", record.frame, record.timestamp_ms);
  for (const auto &d : record.detections) {
    out += fmt::format(" {}:{}:{}:{}:{}:{}", d.label, d.confidence, d.box.x1, d.box.y1, d.box.x2,
                       d.box.y2);
  }
  return out;
}

ReplayBackend::ReplayBackend(std::vector<ReplayRecord> records) {
  for (auto &r : records) records_[r.frame] = std::move(r.detections);
}

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open replay file " + path.string());
  return std::make_unique<ReplayBackend>(parse_replay(in));
}

Detections ReplayBackend::detect(const Frame &frame) {
  auto it = records_.find(frame.index);
  if (it == records_.end()) return {};
  Detections out;
  out.reserve(it->second.size());
  for (auto d : it->second) {
    d.box = clip_to_frame(d.box, frame.width, frame.height);
    out.push_back(std::move(d));
  }
  return out;
}

void SyntheticScript::validate() const {
  if (dropout < 0.0 || dropout > 1.0) throw InvalidScript("dropout must be in [0,1]");
  for (const auto &t : trajectories) {
    if (t.label.empty()) throw InvalidScript("trajectory without label");
    if (t.end_frame < t.start_frame) throw InvalidScript("trajectory '" + t.label + "': end < start");
    if (!t.box.valid() || t.box.area() <= 0.0) {
      throw InvalidScript("trajectory '" + t.label + "': zero-area box");
    }
    if (t.confidence < 0.0 || t.confidence > 1.0) {
      throw InvalidScript("trajectory '" + t.label + "': confidence outside [0,1]");
    }
  }
}

SyntheticScript parse_synthetic_script(std::string_view text) {
  auto config = FlatConfig::parse(text);
  SyntheticScript script;
  std::vector<std::string> names;

  auto number = [](const FlatConfig::Entry &e) {
    auto v = parse_double(e.value);
    if (!v) throw ParseError(e.line, "bad number for " + e.key);
    return *v;
  };
  auto pair = [](const FlatConfig::Entry &e) {
    auto parts = split(e.value, ',');
    if (parts.size() != 2) throw ParseError(e.line, e.key + " expects 'x,y'");
    auto a = parse_double(parts[0]);
    auto b = parse_double(parts[1]);
    if (!a || !b) throw ParseError(e.line, "bad number for " + e.key);
    return std::pair{*a, *b};
  };

  for (const auto &e : config.entries()) {
    if (e.key == "seed") {
      auto v = parse_int(e.value);
      if (!v || *v < 0) throw ParseError(e.line, "seed must be a non-negative integer");
      script.seed = static_cast<std::uint64_t>(*v);
      continue;
    }
    if (e.key == "dropout") {
      script.dropout = number(e);
      continue;
    }
    auto parts = split(e.key, '.');
    if (parts.size() != 3 || parts[0] != "object" || parts[1].empty()) {
      throw ParseError(e.line, "unknown key '" + e.key + "'");
    }
    auto pos = std::find(names.begin(), names.end(), parts[1]);
    if (pos == names.end()) {
      names.push_back(parts[1]);
      script.trajectories.emplace_back();
      pos = names.end() - 1;
    }
    auto &t = script.trajectories[static_cast<std::size_t>(pos - names.begin())];
    const auto &field = parts[2];
    if (field == "label") {
      t.label = e.value;
    } else if (field == "start") {
      auto v = parse_int(e.value);
      if (!v) throw ParseError(e.line, "bad integer for " + e.key);
      t.start_frame = *v;
    } else if (field == "end") {
      auto v = parse_int(e.value);
      if (!v) throw ParseError(e.line, "bad integer for " + e.key);
      t.end_frame = *v;
    } else if (field == "box") {
      auto c = split(e.value, ',');
      if (c.size() != 4) throw ParseError(e.line, e.key + " expects 'x1,y1,x2,y2'");
      double v[4];
      for (int i = 0; i < 4; ++i) {
        auto parsed = parse_double(c[i]);
        if (!parsed) throw ParseError(e.line, "bad number for " + e.key);
        v[i] = *parsed;
      }
      t.box = BBox{v[0], v[1], v[2], v[3]};
    } else if (field == "velocity") {
      std::tie(t.vx, t.vy) = pair(e);
    } else if (field == "confidence") {
      t.confidence = number(e);
    } else {
      throw ParseError(e.line, "unknown key '" + e.key + "'");
    }
  }
  script.validate();
  return script;
}

SyntheticScript load_synthetic_script(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synthetic script " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_synthetic_script(text.str());
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_draw(std::uint64_t seed, std::int64_t frame, std::size_t object) {
  auto h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(frame) ^ splitmix64(object)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

SyntheticBackend::SyntheticBackend(SyntheticScript script) : script_(std::move(script)) {
  script_.validate();
}

Detections SyntheticBackend::detect(const Frame &frame) {
  Detections out;
  for (std::size_t i = 0; i < script_.trajectories.size(); ++i) {
    const auto &t = script_.trajectories[i];
    if (frame.index < t.start_frame || frame.index > t.end_frame) continue;
    if (script_.dropout > 0.0 && unit_draw(script_.seed, frame.index, i) < script_.dropout) continue;
    const double steps = static_cast<double>(frame.index - t.start_frame);
    BBox moved{t.box.x1 + t.vx * steps, t.box.y1 + t.vy * steps, t.box.x2 + t.vx * steps,
               t.box.y2 + t.vy * steps};
    auto clipped = clip_to_frame(moved, frame.width, frame.height);
    if (clipped.area() <= 0.0) continue;  // left the field of view
    out.push_back(Detection{clipped, t.label, t.confidence});
  }
  return out;
}

}  // namespace edgewatch
