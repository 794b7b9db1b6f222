// Scripted inputs shared by the unit and acceptance tests.
#pragma once

#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "edgewatch/association.hpp"

namespace fixture {

using namespace edgewatch;

// Two targets walking head-on along the same row and passing through each
// other at frame 30. Returns how many tracks were associated with more than
// one ground-truth target.
inline int crossing_swaps(std::uint64_t seed, const AssociationConfig& cfg, bool orthogonal) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Tracker tracker(cfg);
  std::map<TrackId, std::set<int>> seen;
  for (int f = 0; f < 60; ++f) {
    std::vector<Detection> dets(2);
    const double x[2] = {200.0 + 3.0 * f, 380.0 - 3.0 * f};
    for (int k = 0; k < 2; ++k) {
      dets[k].frame = f;
      dets[k].box = {x[k] - 15 + noise(rng), 200 - 40 + noise(rng), 30, 80};
      dets[k].confidence = 0.9;
      dets[k].descriptor = Descriptor::basis(orthogonal ? static_cast<std::size_t>(k) : 0);
    }
    const FrameResult r = tracker.step(f, dets);
    for (const auto& [id, col] : r.matches) seen[id].insert(static_cast<int>(col));
  }
  int swaps = 0;
  for (const auto& [id, targets] : seen) swaps += targets.size() > 1 ? 1 : 0;
  return swaps;
}

// Frame (counted from 1 after the last association) at which a confirmed
// track starved of detections is deleted, or -1.
inline int starvation_deletion_step(int i_max) {
  AssociationConfig cfg;
  cfg.i_max = i_max;
  Tracker tracker(cfg);
  Detection d;
  d.box = {100, 100, 30, 80};
  d.confidence = 0.9;
  d.descriptor = Descriptor::basis(0);
  for (int f = 0; f < cfg.n_init; ++f) tracker.step(f, {d});
  for (int k = 1; k <= i_max + 5; ++k) {
    const FrameResult r = tracker.step(cfg.n_init - 1 + k, {});
    if (!r.deleted_tracks.empty()) return k;
  }
  return -1;
}

inline std::string cli_path() {
  const char* p = std::getenv("EDGEWATCH_CLI");
  return p ? p : "";
}

}  // namespace fixture
