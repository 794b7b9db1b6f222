#include "edgewatch/anomaly_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgewatch {

void AnomalyEngineOptions::validate() const {
  rules.validate();
  if (template_length < 1) throw std::invalid_argument("template_length must be positive");
  if (template_window < 2) throw std::invalid_argument("template_window must be at least 2");
  if (!(template_threshold > 0.0 && template_threshold <= 1.0)) {
    throw std::invalid_argument("template_threshold must lie in (0, 1]");
  }
}

AnomalyEngine::AnomalyEngine(AnomalyEngineOptions options)
    : options_(options), templates_(builtin_templates()) {
  options_.validate();
}

std::size_t AnomalyEngine::history_capacity() const {
  const auto& p = options_.rules;
  const int frames = std::max({p.loiter_max_window, p.circle_window, p.jump_window, p.speed_window,
                               p.converge_frames + p.eval_stride + 3, options_.template_window});
  return static_cast<std::size_t>(frames);
}

namespace {

std::vector<TrajectoryPoint> trailing(const std::deque<TrajectoryPoint>& h, int frames) {
  const std::int64_t first = h.back().frame - frames + 1;
  auto it = h.end();
  while (it != h.begin() && std::prev(it)->frame >= first) --it;
  return {it, h.end()};
}

// Longest trailing run whose bounding-box diagonal stays below `radius`;
// every point of such a run lies within `radius` of its centroid.
std::vector<TrajectoryPoint> still_suffix(const std::deque<TrajectoryPoint>& h, double radius,
                                          int max_frames) {
  const std::int64_t first = h.back().frame - max_frames + 1;
  double umin = h.back().observation.u, umax = umin;
  double vmin = h.back().observation.v, vmax = vmin;
  auto it = std::prev(h.end());
  while (it != h.begin()) {
    const auto& p = *std::prev(it);
    if (p.frame < first) break;
    const double nu0 = std::min(umin, p.observation.u), nu1 = std::max(umax, p.observation.u);
    const double nv0 = std::min(vmin, p.observation.v), nv1 = std::max(vmax, p.observation.v);
    if (std::hypot(nu1 - nu0, nv1 - nv0) >= radius) break;
    umin = nu0, umax = nu1, vmin = nv0, vmax = nv1;
    --it;
  }
  return {it, h.end()};
}

}  // namespace

std::vector<AnomalyEvent> AnomalyEngine::process(const FrameResult& fr) {
  std::vector<AnomalyEvent> opened;
  for (TrackId id : fr.deleted_tracks) tracks_.erase(id);

  const std::size_t cap = history_capacity();
  for (const auto& snap : fr.active_tracks) {
    auto [it, inserted] = tracks_.try_emplace(snap.id);
    TrackState& t = it->second;
    if (inserted && options_.enable_templates) {
      for (const auto& tmpl : templates_) {
        t.matchers.emplace_back(std::vector<AnomalyTemplate>(
            static_cast<std::size_t>(options_.template_length), tmpl));
      }
    }
    if (!snap.backfill.empty()) {
      t.history.assign(snap.backfill.begin(), snap.backfill.end());
    } else if (snap.updated) {
      t.history.push_back({fr.frame, snap.measurement});
    }
    while (t.history.size() > cap) t.history.pop_front();
    if (snap.updated && t.history.size() >= 2) evaluate_track(snap.id, t, fr.frame, opened);
  }

  if (options_.enable_rules && fr.frame % options_.rules.eval_stride == 0) {
    evaluate_groups(fr.frame, opened);
  }

  const std::int64_t stale = fr.frame - options_.rules.merge_gap;
  for (auto it = open_.begin(); it != open_.end();) {
    if (it->last_hit < stale) {
      closed_.push_back(std::move(it->event));
      it = open_.erase(it);
    } else {
      ++it;
    }
  }
  return opened;
}

void AnomalyEngine::evaluate_track(TrackId id, TrackState& t, std::int64_t frame,
                                   std::vector<AnomalyEvent>& opened) {
  const auto& p = options_.rules;

  if (options_.enable_rules) {
    const auto speed_window = trailing(t.history, p.speed_window);
    if (speed_window.size() >= 2) {
      const MotionFeatures f = motion_features(speed_window);
      const double threshold = fast_motion_threshold(scene_, p);
      const auto score = enabled(AnomalyCode::kFast) ? detect_fast_motion(f, scene_, p)
                                                     : std::nullopt;
      if (score) {
        std::int64_t lo = speed_window.back().frame;
        std::int64_t hi = speed_window.front().frame;
        for (std::size_t i = 1; i < speed_window.size(); ++i) {
          const auto& a = speed_window[i - 1];
          const auto& b = speed_window[i];
          const double speed = std::hypot(b.observation.u - a.observation.u,
                                          b.observation.v - a.observation.v) /
                               static_cast<double>(b.frame - a.frame);
          if (speed > threshold) {
            lo = std::min(lo, a.frame);
            hi = std::max(hi, b.frame);
          }
        }
        if (lo > hi) lo = speed_window.front().frame, hi = speed_window.back().frame;
        hit(AnomalyCode::kFast, {id}, lo, hi, *score, frame, opened);
      } else {
        scene_.add_speed(f.mean_speed);
      }
    }

    if (enabled(AnomalyCode::kLoiter)) {
      const auto still = still_suffix(t.history, p.still_radius, p.loiter_max_window);
      if (still.size() >= 2) {
        const MotionFeatures f = motion_features(still);
        if (const auto score = detect_loitering(f, p)) {
          hit(AnomalyCode::kLoiter, {id}, still.front().frame, frame, *score, frame, opened);
        }
      }
    }

    if (enabled(AnomalyCode::kCircular)) {
      const auto window = trailing(t.history, p.circle_window);
      if (window.size() >= 3) {
        if (const auto score = detect_circular(motion_features(window), p)) {
          hit(AnomalyCode::kCircular, {id}, window.front().frame, frame, *score, frame, opened);
        }
      }
    }

    const auto jump_window = trailing(t.history, p.jump_window);
    if (jump_window.size() >= 3) {
      const auto score =
          enabled(AnomalyCode::kJump) ? detect_jump(jump_window, scene_, p) : std::nullopt;
      const VerticalExcursion ex = vertical_excursion(jump_window, p.jump_span_frac);
      if (score) {
        hit(AnomalyCode::kJump, {id}, ex.span_start, ex.span_end, *score, frame, opened);
      } else if (2 * static_cast<int>(jump_window.size()) >= p.jump_window) {
        scene_.add_vertical(ex.excursion);
      }
    }
  }

  if (options_.enable_templates && !t.matchers.empty()) {
    const auto window = trailing(t.history, options_.template_window);
    FeatureScale scale;
    scale.speed_ref = scene_.speed_samples() > 0 && scene_.speed_mean() > 0.0
                          ? scene_.speed_mean()
                          : p.abs_speed / 3.0;
    scale.still_radius = p.still_radius;
    scale.vertical_ref = jump_threshold(scene_, p);
    const FeatureVector v = feature_vector(motion_features(window), scale);
    t.pushed_frames.push_back(frame);
    for (std::size_t k = 0; k < t.matchers.size(); ++k) {
      const auto match = t.matchers[k].push(v);
      if (!match) continue;
      const double mean_sim = match->theta / static_cast<double>(options_.template_length);
      const AnomalyCode code = templates_[k].code;
      if (mean_sim >= options_.template_threshold && enabled(code)) {
        hit(code, {id}, t.pushed_frames.front(), frame, mean_sim, frame, opened);
      }
    }
    while (t.pushed_frames.size() >= static_cast<std::size_t>(options_.template_length)) {
      t.pushed_frames.pop_front();
    }
  }
}

void AnomalyEngine::evaluate_groups(std::int64_t frame, std::vector<AnomalyEvent>& opened) {
  const auto& p = options_.rules;
  const std::int64_t previous = last_group_tick_;
  last_group_tick_ = frame;
  std::vector<TrackWindow> windows;
  windows.reserve(tracks_.size());
  for (const auto& [id, t] : tracks_) {
    if (t.history.empty()) continue;
    windows.push_back({id, trailing(t.history, p.converge_frames + p.eval_stride + 3)});
  }

  constexpr std::array<AnomalyCode, 2> codes{AnomalyCode::kGather, AnomalyCode::kDisperse};
  for (std::size_t k = 0; k < codes.size(); ++k) {
    if (!enabled(codes[k])) continue;
    auto detect = [&](std::int64_t at) -> std::optional<AnomalyEvent> {
      if (windows.size() < static_cast<std::size_t>(p.min_group)) return std::nullopt;
      return k == 0 ? detect_gathering(windows, at, p) : detect_dispersion(windows, at, p);
    };
    const auto ev = detect(frame);
    // On a change of state, the frames skipped since the previous tick are
    // examined so that onsets and offsets are not quantised to the stride.
    if (ev.has_value() != group_firing_[k] && previous > frame - p.eval_stride - 1) {
      for (std::int64_t at = previous + 1; at < frame; ++at) {
        if (auto e = detect(at)) hit(e->code, e->track_ids, e->frame_start, e->frame_end, e->score, frame, opened);
      }
    }
    if (ev) hit(ev->code, ev->track_ids, ev->frame_start, ev->frame_end, ev->score, frame, opened);
    group_firing_[k] = ev.has_value();
  }
}

void AnomalyEngine::hit(AnomalyCode code, std::vector<TrackId> ids, std::int64_t start,
                        std::int64_t end, double score, std::int64_t frame,
                        std::vector<AnomalyEvent>& opened) {
  std::sort(ids.begin(), ids.end());
  for (auto& o : open_) {
    auto& ev = o.event;
    if (ev.code != code || start > ev.frame_end + options_.rules.merge_gap) continue;
    std::vector<TrackId> common;
    std::set_intersection(ev.track_ids.begin(), ev.track_ids.end(), ids.begin(), ids.end(),
                          std::back_inserter(common));
    if (common.empty()) continue;
    std::vector<TrackId> merged;
    std::set_union(ev.track_ids.begin(), ev.track_ids.end(), ids.begin(), ids.end(),
                   std::back_inserter(merged));
    ev.track_ids = std::move(merged);
    ev.frame_start = std::min(ev.frame_start, start);
    ev.frame_end = std::max(ev.frame_end, end);
    ev.score = std::max(ev.score, score);
    o.last_hit = frame;
    return;
  }
  AnomalyEvent ev{code, std::move(ids), start, end, score};
  opened.push_back(ev);
  open_.push_back({std::move(ev), frame});
}

void AnomalyEngine::finish() {
  for (auto& o : open_) closed_.push_back(std::move(o.event));
  open_.clear();
}

std::vector<AnomalyEvent> AnomalyEngine::events() const {
  std::vector<AnomalyEvent> all = closed_;
  for (const auto& o : open_) all.push_back(o.event);
  std::sort(all.begin(), all.end(), [](const AnomalyEvent& a, const AnomalyEvent& b) {
    if (a.frame_start != b.frame_start) return a.frame_start < b.frame_start;
    if (a.code != b.code) return a.code < b.code;
    if (a.track_ids != b.track_ids) return a.track_ids < b.track_ids;
    return a.frame_end < b.frame_end;
  });
  return all;
}

double AnomalyEngine::score(std::int64_t frame) const {
  const auto all = events();
  return frame_regularity_score(all, frame);
}

}  // namespace edgewatch
