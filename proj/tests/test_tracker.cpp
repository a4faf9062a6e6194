#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "edgewatch/errors.hpp"
#include "edgewatch/tracker.hpp"
#include "tracker_oracle.hpp"

using namespace edgewatch;

namespace {

TimePoint at_ms(std::int64_t ms) { return TimePoint{Millis{ms}}; }

Detection det(double x1, double y1, double x2, double y2, std::string label = "person") {
  return Detection{BBox{x1, y1, x2, y2}, std::move(label), 0.9};
}

BBox to_bbox(const oracle::Box &b) { return BBox{b.x1, b.y1, b.x2, b.y2}; }

}  // namespace

TEST(Iou, IdenticalBoxesScoreOne) {
  BBox a{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
}

TEST(Iou, DisjointAndDegenerateBoxesScoreZero) {
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 10, 10}, BBox{20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 0, 0}, BBox{0, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 10, 10}, BBox{10, 0, 20, 10}), 0.0);
}

TEST(Iou, HalfOverlap) {
  // Intersection 50, union 150.
  EXPECT_NEAR(iou(BBox{0, 0, 10, 10}, BBox{5, 0, 15, 10}), 1.0 / 3.0, 1e-12);
}

TEST(Tracker, FirstUpdateOpensTracksWithIdsFromOne) {
  TrackerState state;
  TrackerConfig cfg;
  auto r = passive_tracker_update(state, {det(0, 0, 10, 10), det(50, 50, 60, 60)}, cfg, at_ms(0));
  EXPECT_TRUE(r.empty());
  ASSERT_EQ(state.tracks.size(), 2u);
  EXPECT_EQ(state.tracks[0].id, 1u);
  EXPECT_EQ(state.tracks[1].id, 2u);
  EXPECT_EQ(state.next_id, 2u);
}

TEST(Tracker, MatchAdoptsDetectionBoxAndResetsLost) {
  TrackerState state;
  TrackerConfig cfg;
  passive_tracker_update(state, {det(0, 0, 10, 10)}, cfg, at_ms(0));
  passive_tracker_update(state, {}, cfg, at_ms(100));
  ASSERT_EQ(state.tracks[0].lost_count, 1);
  auto r = passive_tracker_update(state, {det(1, 1, 11, 11)}, cfg, at_ms(200));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].first, 1u);
  EXPECT_EQ(state.tracks[0].box, (BBox{1, 1, 11, 11}));
  EXPECT_EQ(state.tracks[0].lost_count, 0);
  EXPECT_EQ(state.tracks[0].first_seen, at_ms(0));
}

TEST(Tracker, IouEqualToThetaDoesNotMatch) {
  TrackerState state;
  TrackerConfig cfg;
  cfg.theta = 1.0 / 3.0;
  passive_tracker_update(state, {det(0, 0, 10, 10)}, cfg, at_ms(0));
  auto r = passive_tracker_update(state, {det(5, 0, 15, 10)}, cfg, at_ms(100));
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(state.tracks.size(), 2u);
}

TEST(Tracker, UnmatchedTrackEvictedWhenLostReachesLimit) {
  TrackerState state;
  TrackerConfig cfg;
  cfg.l_max = 3;
  passive_tracker_update(state, {det(0, 0, 10, 10)}, cfg, at_ms(0));
  passive_tracker_update(state, {}, cfg, at_ms(1));
  passive_tracker_update(state, {}, cfg, at_ms(2));
  ASSERT_EQ(state.tracks.size(), 1u);
  EXPECT_EQ(state.tracks[0].lost_count, 2);
  passive_tracker_update(state, {}, cfg, at_ms(3));
  EXPECT_TRUE(state.tracks.empty());
}

TEST(Tracker, MatchingIgnoresLabelsAndKeepsCreationLabel) {
  TrackerState state;
  TrackerConfig cfg;
  passive_tracker_update(state, {det(0, 0, 10, 10, "person")}, cfg, at_ms(0));
  auto r = passive_tracker_update(state, {det(0, 0, 10, 10, "car")}, cfg, at_ms(1));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(state.tracks[0].label, "person");
}

TEST(Tracker, EarlierTrackWinsContestedDetection) {
  TrackerState state;
  TrackerConfig cfg;
  passive_tracker_update(state, {det(0, 0, 10, 10), det(2, 0, 12, 10)}, cfg, at_ms(0));
  // One detection overlapping both tracks: the older track takes it.
  auto r = passive_tracker_update(state, {det(1, 0, 11, 10)}, cfg, at_ms(1));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].first, 1u);
  EXPECT_EQ(state.tracks[1].lost_count, 1);
}

TEST(Tracker, IdsAreNeverReusedAfterEviction) {
  TrackerState state;
  TrackerConfig cfg;
  cfg.l_max = 1;
  passive_tracker_update(state, {det(0, 0, 10, 10)}, cfg, at_ms(0));
  passive_tracker_update(state, {}, cfg, at_ms(1));
  ASSERT_TRUE(state.tracks.empty());
  passive_tracker_update(state, {det(0, 0, 10, 10)}, cfg, at_ms(2));
  EXPECT_EQ(state.tracks[0].id, 2u);
}

TEST(TrackerConfig, ValidationNamesField) {
  TrackerConfig cfg;
  cfg.theta = 1.5;
  try {
    cfg.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError &e) {
    EXPECT_EQ(e.field(), "tracker.theta");
  }
  cfg = {};
  cfg.l_max = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.dwell_seconds = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Triggers, FireAfterDwellThenRespectCooldown) {
  TrackerState state;
  TrackerConfig cfg;
  cfg.dwell_seconds = 2;
  cfg.cooldown_seconds = 3;
  std::vector<std::int64_t> fired_at;
  for (std::int64_t ms = 0; ms <= 10'000; ms += 500) {
    passive_tracker_update(state, {det(0, 0, 10, 10)}, cfg, at_ms(ms));
    if (!evaluate_triggers(state, cfg, at_ms(ms)).empty()) fired_at.push_back(ms);
  }
  EXPECT_EQ(fired_at, (std::vector<std::int64_t>{2000, 5000, 8000}));
}

TEST(Triggers, TargetLabelsFilterAndLostTracksNeverFire) {
  TrackerState state;
  TrackerConfig cfg;
  cfg.dwell_seconds = 1;
  cfg.target_labels = {"car"};
  passive_tracker_update(state, {det(0, 0, 10, 10, "person"), det(50, 50, 60, 60, "car")}, cfg, at_ms(0));
  passive_tracker_update(state, {det(0, 0, 10, 10, "person")}, cfg, at_ms(1000));
  // The car track was not matched in this frame.
  EXPECT_TRUE(evaluate_triggers(state, cfg, at_ms(1000)).empty());
  passive_tracker_update(state, {det(0, 0, 10, 10, "person"), det(50, 50, 60, 60, "car")}, cfg, at_ms(1100));
  EXPECT_EQ(evaluate_triggers(state, cfg, at_ms(1100)), (std::vector<TrackId>{2}));
}

// Smaller copy of the acceptance oracle check, so a regression shows up as a
// unit failure with the offending seed.
TEST(TrackerOracle, MatchesLiteralTranscription) {
  std::mt19937_64 rng(20240611);
  for (int instance = 0; instance < 300; ++instance) {
    TrackerConfig cfg;
    cfg.theta = std::array{0.1, 0.3, 0.5}[instance % 3];
    cfg.l_max = std::array{1, 3, 10}[(instance / 3) % 3];
    TrackerState state;
    std::map<std::uint64_t, oracle::Tr> T;
    std::uint64_t id_new = 0;
    std::vector<oracle::Box> previous;
    for (int frame = 0; frame < 4; ++frame) {
      std::uniform_int_distribution<int> count(0, 6);
      std::vector<oracle::Box> D;
      const int n = count(rng);
      for (int j = 0; j < n; ++j) {
        D.push_back(!previous.empty() && rng() % 2 ? oracle::jitter(rng, previous[rng() % previous.size()])
                                                   : oracle::random_box(rng));
      }
      Detections dets;
      for (const auto &b : D) dets.push_back(Detection{to_bbox(b), "obj", 0.9});
      auto expected = oracle::PassiveTrackerUpdate(T, D, cfg.theta, cfg.l_max, id_new);
      auto got = passive_tracker_update(state, dets, cfg, at_ms(frame * 100));

      ASSERT_EQ(got.size(), expected.matches.size()) << "instance " << instance;
      for (std::size_t k = 0; k < got.size(); ++k) {
        EXPECT_EQ(got[k].first, expected.matches[k].first);
        EXPECT_EQ(got[k].second.box, to_bbox(D[expected.matches[k].second]));
      }
      ASSERT_EQ(state.tracks.size(), expected.tracks.size()) << "instance " << instance;
      auto it = expected.tracks.begin();
      for (const auto &t : state.tracks) {
        EXPECT_EQ(t.id, it->first);
        EXPECT_EQ(t.box, to_bbox(it->second.b));
        EXPECT_EQ(t.lost_count, it->second.l);
        ++it;
      }
      EXPECT_EQ(state.next_id, expected.id_new);
      T = expected.tracks;
      id_new = expected.id_new;
      previous = D;
    }
  }
}

TEST(TrackerProperties, IouIsBoundedAndSymmetric) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    auto a = to_bbox(oracle::random_box(rng));
    auto b = to_bbox(oracle::random_box(rng));
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
  }
}
