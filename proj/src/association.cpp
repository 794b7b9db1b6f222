#include "edgewatch/association.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace edgewatch {

void AssociationConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(max_cos_distance > 0.0)) throw std::invalid_argument("max_cos_distance must be positive");
  if (!(mahalanobis_gate > 0.0)) throw std::invalid_argument("mahalanobis_gate must be positive");
  if (i_max < 1) throw std::invalid_argument("i_max must be a positive integer");
  if (n_init < 1) throw std::invalid_argument("n_init must be a positive integer");
  if (gallery_capacity < 1) throw std::invalid_argument("gallery_capacity must be positive");
}

double combined_cost(double c_motion, double c_appearance, double lambda) {
  if (lambda == 1.0) return c_motion;
  if (lambda == 0.0) return c_appearance;
  return lambda * c_motion + (1.0 - lambda) * c_appearance;
}

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

CostMatrix build_cost_matrix(const std::vector<Track>& tracks, const std::vector<Detection>& dets,
                             const AssociationConfig& cfg, const KalmanFilter& kf) {
  for (std::size_t m = 0; m < dets.size(); ++m) {
    if (!dets[m].descriptor) {
      throw AssociationError("detection " + std::to_string(m) + " of frame " +
                             std::to_string(dets[m].frame) + " has no appearance descriptor");
    }
  }

  std::vector<Vector4> measurements;
  measurements.reserve(dets.size());
  for (const auto& d : dets) measurements.push_back(to_vector(to_observation(d.box)));

  CostMatrix costs(tracks.size(), dets.size());
  for (std::size_t l = 0; l < tracks.size(); ++l) {
    const MahalanobisGate gate(kf.project(tracks[l].state), kf.config().max_condition);
    for (std::size_t m = 0; m < dets.size(); ++m) {
      const double motion = gate.distance_sq(measurements[m]);
      if (motion > cfg.mahalanobis_gate) continue;
      const double appearance = min_cosine_to_gallery(tracks[l].gallery, *dets[m].descriptor);
      if (appearance > cfg.max_cos_distance) continue;
      costs.at(l, m) = combined_cost(motion, appearance, cfg.lambda);
    }
  }
  return costs;
}

double Assignment::total_cost(const CostMatrix& m) const {
  double total = 0.0;
  for (const auto& [r, c] : matches) total += m.at(r, c);
  return total;
}

Assignment assign(const CostMatrix& costs) {
  const std::size_t rows = costs.rows();
  const std::size_t cols = costs.cols();
  const std::size_t n = std::max(rows, cols);

  double max_cost = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (costs.feasible(r, c)) max_cost = std::max(max_cost, costs.at(r, c));
    }
  }
  // Any matching with one more feasible pair is cheaper than one with fewer.
  const double big = (max_cost + 1.0) * static_cast<double>(n + 1);
  auto cell = [&](std::size_t r, std::size_t c) {
    return (r < rows && c < cols && costs.feasible(r, c)) ? costs.at(r, c) : big;
  };

  // Shortest augmenting path with potentials on the padded square matrix,
  // 1-based with index 0 as the virtual source column.
  std::vector<double> row_pot(n + 1, 0.0);
  std::vector<double> col_pot(n + 1, 0.0);
  std::vector<std::size_t> col_owner(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    col_owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> min_slack(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = col_owner[j0];
      double delta = std::numeric_limits<double>::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cell(i0 - 1, j - 1) - row_pot[i0] - col_pot[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          row_pot[col_owner[j]] += delta;
          col_pot[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_owner[j0] = col_owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, n);
  for (std::size_t j = 1; j <= n; ++j) {
    if (col_owner[j] != 0) row_to_col[col_owner[j] - 1] = j - 1;
  }

  Assignment out;
  std::vector<bool> col_matched(cols, false);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = row_to_col[r];
    if (c < cols && costs.feasible(r, c)) {
      out.matches.emplace_back(r, c);
      col_matched[c] = true;
    } else {
      out.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_matched[c]) out.unmatched_cols.push_back(c);
  }
  return out;
}

Tracker::Tracker(AssociationConfig cfg) : cfg_(cfg), kf_(cfg.kalman) { cfg_.validate(); }

FrameResult Tracker::step(std::int64_t frame, const std::vector<Detection>& dets) {
  if (frame <= last_frame_) {
    throw AssociationError("frame " + std::to_string(frame) + " does not follow frame " +
                           std::to_string(last_frame_));
  }
  last_frame_ = frame;

  FrameResult result;
  result.frame = frame;

  for (auto& t : tracks_) {
    t.state = kf_.predict(t.state);
    ++t.frames_since_association;
  }

  const CostMatrix costs = build_cost_matrix(tracks_, dets, cfg_, kf_);
  const Assignment assignment = assign(costs);

  std::vector<bool> updated(tracks_.size(), false);
  std::vector<bool> promoted(tracks_.size(), false);
  std::vector<Observation> measured(tracks_.size());
  for (const auto& [row, col] : assignment.matches) {
    Track& t = tracks_[row];
    const Observation obs = to_observation(dets[col].box);
    t.state = kf_.update(t.state, obs);
    t.gallery.push(*dets[col].descriptor);
    t.frames_since_association = 0;
    ++t.hits;
    if (t.status == TrackStatus::kTentative) t.history.push_back({frame, obs});
    if (t.status == TrackStatus::kTentative && t.hits >= cfg_.n_init) {
      t.status = TrackStatus::kConfirmed;
      promoted[row] = true;
    }
    updated[row] = true;
    measured[row] = obs;
    result.matches.emplace_back(t.id, col);
  }

  for (std::size_t row : assignment.unmatched_rows) {
    Track& t = tracks_[row];
    if (t.status == TrackStatus::kTentative || t.frames_since_association >= cfg_.i_max) {
      t.status = TrackStatus::kDeleted;
    }
  }

  for (std::size_t col : assignment.unmatched_cols) {
    const Observation obs = to_observation(dets[col].box);
    Track t{next_id_++, kf_.initiate(obs), Gallery(cfg_.gallery_capacity), 0, 1,
            TrackStatus::kTentative, {}};
    const bool confirmed_now = cfg_.n_init <= 1;
    if (confirmed_now) t.status = TrackStatus::kConfirmed;
    t.gallery.push(*dets[col].descriptor);
    t.history.push_back({frame, obs});
    result.new_tracks.push_back(t.id);
    tracks_.push_back(std::move(t));
    updated.push_back(true);
    promoted.push_back(confirmed_now);
    measured.push_back(obs);
  }

  std::vector<Track> alive;
  alive.reserve(tracks_.size());
  for (std::size_t k = 0; k < tracks_.size(); ++k) {
    Track& t = tracks_[k];
    if (t.status == TrackStatus::kDeleted) {
      result.deleted_tracks.push_back(t.id);
      continue;
    }
    if (t.status == TrackStatus::kConfirmed) {
      result.active_tracks.push_back({t.id, t.state, t.hits, updated[k], measured[k], {}});
      if (promoted[k]) {
        result.active_tracks.back().backfill = std::move(t.history);
        t.history = {};
      }
    }
    alive.push_back(std::move(t));
  }
  tracks_ = std::move(alive);

  std::sort(result.deleted_tracks.begin(), result.deleted_tracks.end());
  std::sort(result.active_tracks.begin(), result.active_tracks.end(),
            [](const TrackSnapshot& a, const TrackSnapshot& b) { return a.id < b.id; });
  return result;
}

}  // namespace edgewatch
