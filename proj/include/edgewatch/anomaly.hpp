#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgewatch/association.hpp"

namespace edgewatch {

class AnomalyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AnomalyCode : std::uint8_t {
  kLoiter = 0,
  kFast = 1,
  kCircular = 2,
  kJump = 3,
  kGather = 4,
  kDisperse = 5,
};

inline constexpr int kAnomalyClassCount = 6;

const char* to_string(AnomalyCode code);

/// Summary statistics of a trajectory window.
struct MotionFeatures {
  double mean_speed = 0.0;          // px/frame
  double speed_std = 0.0;           // px/frame
  double net_displacement = 0.0;    // px
  double path_length = 0.0;         // px
  double winding = 0.0;             // signed radians
  double vertical_amplitude = 0.0;  // px, max(v) - min(v)
  double confinement_radius = 0.0;  // px, max distance from the window centroid
  int window_len = 0;               // frames spanned, inclusive
};

/// Features of a trajectory window (>= 2 samples, strictly increasing frames).
///
/// Step speeds are displacement over frame gap. Winding sums the signed heading
/// changes between consecutive steps, each wrapped to (-pi, pi]. The k - 1
/// heading changes of k steps only span the interior of the window, so the sum
/// is scaled by k / (k - 1) to cover the whole window; a closed loop sampled at
/// n points then reports a full turn of 2*pi.
MotionFeatures motion_features(std::span<const TrajectoryPoint> window);

struct RuleParams {
  // loitering
  double still_radius = 10.0;
  int still_frames = 75;
  int loiter_max_window = 300;
  // fast motion
  double k_sigma = 3.0;
  double abs_speed = 6.0;
  int speed_window = 10;
  int min_population_samples = 20;
  // circular / spiral
  double min_winding = 2.0 * std::numbers::pi;
  double closure_frac = 0.35;
  int circle_window = 150;
  double min_circle_speed = 1.2;
  double min_circle_radius = 10.0;
  // jumping
  double jump_factor = 3.0;
  int jump_window = 15;
  double min_jump_px = 12.0;
  double jump_span_frac = 0.2;
  // gathering / dispersion
  double meet_radius = 80.0;
  int converge_frames = 30;
  int min_group = 4;
  double min_approach = 20.0;
  int eval_stride = 5;
  // event bookkeeping
  int merge_gap = 15;

  void validate() const;
};

/// Per-stream running statistics that the relative rules compare against.
class SceneStats {
 public:
  void add_speed(double speed);
  void add_vertical(double excursion);

  std::size_t speed_samples() const { return speed_n_; }
  double speed_mean() const { return speed_mean_; }
  /// Sample standard deviation, undefined below two samples.
  std::optional<double> speed_std() const;
  std::size_t vertical_samples() const { return vertical_n_; }
  double vertical_mean() const { return vertical_mean_; }

 private:
  std::size_t speed_n_ = 0;
  double speed_mean_ = 0.0;
  double speed_m2_ = 0.0;
  std::size_t vertical_n_ = 0;
  double vertical_mean_ = 0.0;
};

/// Fires when the window stays inside `still_radius` for at least
/// `still_frames` frames.
std::optional<double> detect_loitering(const MotionFeatures& f, const RuleParams& p);

/// Speed threshold used by detect_fast_motion: mu + k*sigma once the scene has
/// `min_population_samples` speed samples, `abs_speed` before that.
double fast_motion_threshold(const SceneStats& scene, const RuleParams& p);
std::optional<double> detect_fast_motion(const MotionFeatures& f, const SceneStats& scene,
                                         const RuleParams& p);

std::optional<double> detect_circular(const MotionFeatures& f, const RuleParams& p);

/// Largest one-sided vertical deviation from the chord joining the first and
/// last samples of a window. `opposite` is the largest deviation on the other
/// side; a completed up-and-down excursion keeps it small.
struct VerticalExcursion {
  double excursion = 0.0;
  double opposite = 0.0;
  std::int64_t span_start = 0;
  std::int64_t span_end = 0;
};

VerticalExcursion vertical_excursion(std::span<const TrajectoryPoint> window, double span_frac);
double jump_threshold(const SceneStats& scene, const RuleParams& p);

/// Examines the trailing `jump_window` frames of `history`.
std::optional<double> detect_jump(std::span<const TrajectoryPoint> history,
                                  const SceneStats& scene, const RuleParams& p);

struct AnomalyEvent {
  AnomalyCode code = AnomalyCode::kLoiter;
  std::vector<TrackId> track_ids;
  std::int64_t frame_start = 0;
  std::int64_t frame_end = 0;
  double score = 0.0;

  bool operator==(const AnomalyEvent&) const = default;
};

struct TrackWindow {
  TrackId id = 0;
  std::vector<TrajectoryPoint> points;
};

/// Gathering: at least `min_group` tracks end within `meet_radius` of their
/// common centroid after closing in on it over the last `converge_frames`.
std::optional<AnomalyEvent> detect_gathering(std::span<const TrackWindow> tracks, std::int64_t frame,
                                             const RuleParams& p);
/// Dispersion: the time mirror of gathering, spreading out from a centroid
/// the group shared `converge_frames` ago.
std::optional<AnomalyEvent> detect_dispersion(std::span<const TrackWindow> tracks,
                                              std::int64_t frame, const RuleParams& p);

/// Maximum score over events whose span contains `frame`, 0 when none do.
double frame_regularity_score(std::span<const AnomalyEvent> events, std::int64_t frame);
/// Scores for frames [0, frame_count).
std::vector<double> frame_scores(std::span<const AnomalyEvent> events, std::int64_t frame_count);

/// Event log line: frame_start,frame_end,code,score,track_ids with ids joined
/// by ';' and the score printed with 6 decimals.
void write_event_log(std::ostream& out, std::span<const AnomalyEvent> events);
std::vector<AnomalyEvent> read_event_log(std::istream& in);

}  // namespace edgewatch
