#pragma once

#include <array>
#include <deque>
#include <limits>
#include <map>
#include <vector>

#include "edgewatch/anomaly.hpp"
#include "edgewatch/templates.hpp"

namespace edgewatch {

struct AnomalyEngineOptions {
  RuleParams rules;
  bool enable_rules = true;
  /// Template matching runs alongside the rules; off unless asked for.
  bool enable_templates = false;
  int template_length = 10;
  int template_window = 30;
  double template_threshold = 0.95;
  std::array<bool, kAnomalyClassCount> enabled_codes{true, true, true, true, true, true};

  void validate() const;
};

/// Per-stream anomaly state: trajectory windows of confirmed tracks, scene
/// statistics and open events. Frames must arrive in order; one writer.
///
/// Rule hits carry the frame span that triggered them. Hits of the same class
/// on the same track (or an overlapping group) whose spans lie within
/// `merge_gap` frames of an open event extend it; otherwise they open a new
/// event. Events close once no hit has touched them for `merge_gap` frames.
class AnomalyEngine {
 public:
  explicit AnomalyEngine(AnomalyEngineOptions options = {});

  /// Returns the events opened in this frame.
  std::vector<AnomalyEvent> process(const FrameResult& frame);
  /// Closes every open event.
  void finish();

  /// Closed and open events ordered by (frame_start, code, track ids).
  std::vector<AnomalyEvent> events() const;
  /// Regularity score of `frame` over the events known so far.
  double score(std::int64_t frame) const;

  const SceneStats& scene() const { return scene_; }
  const AnomalyEngineOptions& options() const { return options_; }

 private:
  struct TrackState {
    std::deque<TrajectoryPoint> history;
    std::vector<IncrementalTemplateMatcher> matchers;
    std::deque<std::int64_t> pushed_frames;
  };
  struct OpenEvent {
    AnomalyEvent event;
    std::int64_t last_hit = 0;
  };

  void evaluate_track(TrackId id, TrackState& t, std::int64_t frame,
                      std::vector<AnomalyEvent>& opened);
  void evaluate_groups(std::int64_t frame, std::vector<AnomalyEvent>& opened);
  void hit(AnomalyCode code, std::vector<TrackId> ids, std::int64_t start, std::int64_t end,
           double score, std::int64_t frame, std::vector<AnomalyEvent>& opened);
  bool enabled(AnomalyCode code) const {
    return options_.enabled_codes[static_cast<std::size_t>(code)];
  }
  std::size_t history_capacity() const;

  AnomalyEngineOptions options_;
  std::vector<AnomalyTemplate> templates_;
  SceneStats scene_;
  std::map<TrackId, TrackState> tracks_;
  std::vector<OpenEvent> open_;
  std::vector<AnomalyEvent> closed_;
  std::int64_t last_group_tick_ = std::numeric_limits<std::int64_t>::min() / 2;
  std::array<bool, 2> group_firing_{false, false};  // gather, disperse
};

}  // namespace edgewatch
