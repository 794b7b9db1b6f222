#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "edgewatch/appearance.hpp"
#include "edgewatch/geometry.hpp"
#include "edgewatch/motion.hpp"

namespace edgewatch {

using TrackId = std::uint64_t;

class AssociationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrackStatus { kTentative, kConfirmed, kDeleted };

struct TrajectoryPoint {
  std::int64_t frame = 0;
  Observation observation;
};

struct Track {
  TrackId id = 0;
  TrackState state;
  Gallery gallery;
  int frames_since_association = 0;
  int hits = 0;
  TrackStatus status = TrackStatus::kTentative;
  /// Measurements collected while tentative; handed over on confirmation.
  std::vector<TrajectoryPoint> history;
};

struct AssociationConfig {
  /// Weight of the motion term; the appearance term gets 1 - lambda.
  double lambda = 0.0;
  double max_cos_distance = 0.9;
  /// Chi-square 0.95 quantile for 4 degrees of freedom.
  double mahalanobis_gate = 9.4877;
  int i_max = 30;
  int n_init = 3;
  std::size_t gallery_capacity = Gallery::kDefaultCapacity;
  KalmanConfig kalman;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

double combined_cost(double c_motion, double c_appearance, double lambda);

/// Dense row-major cost matrix. Infeasible entries hold +infinity.
class CostMatrix {
 public:
  static constexpr double kInfeasible = std::numeric_limits<double>::infinity();

  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = kInfeasible);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  bool feasible(std::size_t r, std::size_t c) const { return at(r, c) != kInfeasible; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rows are tracks, columns are detections. Entry (l, m) blends the squared
/// Mahalanobis distance and the gallery's minimum cosine distance; it is
/// infeasible when either exceeds its gate. Throws AssociationError when a
/// detection has no descriptor.
CostMatrix build_cost_matrix(const std::vector<Track>& tracks, const std::vector<Detection>& dets,
                             const AssociationConfig& cfg, const KalmanFilter& kf);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (row, col), row-ascending
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;

  double total_cost(const CostMatrix& m) const;
};

/// Minimum-cost one-to-one matching over feasible entries. Among matchings the
/// solver maximises the number of feasible pairs first, then minimises their
/// summed cost. Costs must be non-negative.
Assignment assign(const CostMatrix& costs);

struct TrackSnapshot {
  TrackId id = 0;
  TrackState state;
  int hits = 0;
  bool updated = false;
  /// Measurement associated in this frame, set when `updated`.
  Observation measurement;
  /// Full trajectory so far, filled only on the frame the track is confirmed.
  std::vector<TrajectoryPoint> backfill;
};

struct FrameResult {
  std::int64_t frame = 0;
  std::vector<std::pair<TrackId, std::size_t>> matches;
  std::vector<TrackId> new_tracks;
  std::vector<TrackId> deleted_tracks;
  /// Confirmed tracks alive after the step, id-ascending.
  std::vector<TrackSnapshot> active_tracks;
};

/// Single-hypothesis tracker. One instance per stream, one step() at a time.
class Tracker {
 public:
  explicit Tracker(AssociationConfig cfg = {});

  /// Throws AssociationError when `frame` does not exceed the previous frame
  /// or a detection lacks a descriptor.
  FrameResult step(std::int64_t frame, const std::vector<Detection>& dets);

  const std::vector<Track>& tracks() const { return tracks_; }
  const AssociationConfig& config() const { return cfg_; }

 private:
  AssociationConfig cfg_;
  KalmanFilter kf_;
  std::vector<Track> tracks_;
  TrackId next_id_ = 1;
  std::int64_t last_frame_ = std::numeric_limits<std::int64_t>::min();
};

}  // namespace edgewatch
