#pragma once

// Line-by-line transcription of the passive tracker update, kept deliberately
// separate from src/tracker.cpp: own types, own IoU, no shared helpers.

#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Box {
  double x1, y1, x2, y2;
};

struct Tr {
  Box b;
  int l = 0;
};

struct Result {
  std::map<std::uint64_t, Tr> tracks;        // T after the update
  std::vector<std::pair<std::uint64_t, std::size_t>> matches;  // R as (track id, detection index)
  std::uint64_t id_new = 0;
};

inline double IoU(const Box &a, const Box &b) {
  double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix < 0) ix = 0;
  if (iy < 0) iy = 0;
  double inter = ix * iy;
  double u = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return u > 0 ? inter / u : 0.0;
}

// T is keyed by id; iteration order of std::map is ascending id, i.e. creation order.
inline Result PassiveTrackerUpdate(std::map<std::uint64_t, Tr> T, const std::vector<Box> &D, double theta,
                                   int L_max, std::uint64_t ID_new) {
  std::map<std::uint64_t, Tr> T2;   // T'
  std::set<std::size_t> U;
  Result out;

  // #1 greedy matching
  for (auto &[i, t_i] : T) {
    bool have = false;
    std::size_t j_star = 0;
    double best = 0;
    for (std::size_t j = 0; j < D.size(); ++j) {
      if (U.count(j)) continue;
      double v = IoU(t_i.b, D[j]);
      if (!have || v > best) {
        have = true;
        best = v;
        j_star = j;
      }
    }
    if (have && IoU(t_i.b, D[j_star]) > theta) {
      T2[i] = Tr{D[j_star], 0};
      U.insert(j_star);
      out.matches.emplace_back(i, j_star);
    } else {
      t_i.l = t_i.l + 1;
      if (t_i.l < L_max) T2[i] = t_i;
    }
  }

  // #2 new tracks
  for (std::size_t j = 0; j < D.size(); ++j) {
    if (U.count(j)) continue;
    ID_new = ID_new + 1;
    T2[ID_new] = Tr{D[j], 0};
  }

  out.tracks = std::move(T2);
  out.id_new = ID_new;
  return out;
}

/// Random box inside a size x size canvas; small sizes so overlaps are common.
inline Box random_box(std::mt19937_64 &rng, double size = 100.0) {
  std::uniform_real_distribution<double> pos(0.0, size);
  std::uniform_real_distribution<double> ext(1.0, size / 2.0);
  double x = pos(rng), y = pos(rng);
  double w = ext(rng), h = ext(rng);
  return Box{x, y, std::min(size, x + w), std::min(size, y + h)};
}

/// Random box that overlaps `near`, to exercise the matching branch.
inline Box jitter(std::mt19937_64 &rng, const Box &near, double size = 100.0) {
  std::uniform_real_distribution<double> d(-6.0, 6.0);
  Box b{near.x1 + d(rng), near.y1 + d(rng), near.x2 + d(rng), near.y2 + d(rng)};
  b.x1 = std::clamp(b.x1, 0.0, size);
  b.y1 = std::clamp(b.y1, 0.0, size);
  b.x2 = std::clamp(b.x2, b.x1, size);
  b.y2 = std::clamp(b.y2, b.y1, size);
  return b;
}

}  // namespace oracle
