#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "edgewatch/anomaly.hpp"

namespace edgewatch {

void RuleParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid anomaly parameter: ") + what);
  };
  require(still_radius > 0, "still_radius");
  require(still_frames >= 2, "still_frames");
  require(loiter_max_window >= still_frames, "loiter_max_window");
  require(k_sigma >= 0, "k_sigma");
  require(abs_speed > 0, "abs_speed");
  require(speed_window >= 2, "speed_window");
  require(min_population_samples >= 2, "min_population_samples");
  require(min_winding > 0, "min_winding");
  require(closure_frac > 0 && closure_frac <= 1, "closure_frac");
  require(circle_window >= 3, "circle_window");
  require(min_circle_speed >= 0, "min_circle_speed");
  require(min_circle_radius >= 0, "min_circle_radius");
  require(jump_factor > 0, "jump_factor");
  require(jump_window >= 3, "jump_window");
  require(min_jump_px >= 0, "min_jump_px");
  require(jump_span_frac > 0 && jump_span_frac < 1, "jump_span_frac");
  require(meet_radius > 0, "meet_radius");
  require(converge_frames >= 3, "converge_frames");
  require(min_group >= 2, "min_group");
  require(min_approach >= 0, "min_approach");
  require(eval_stride >= 1, "eval_stride");
  require(merge_gap >= 0, "merge_gap");
}

void SceneStats::add_speed(double speed) {
  ++speed_n_;
  const double delta = speed - speed_mean_;
  speed_mean_ += delta / static_cast<double>(speed_n_);
  speed_m2_ += delta * (speed - speed_mean_);
}

void SceneStats::add_vertical(double excursion) {
  ++vertical_n_;
  vertical_mean_ += (excursion - vertical_mean_) / static_cast<double>(vertical_n_);
}

std::optional<double> SceneStats::speed_std() const {
  if (speed_n_ < 2) return std::nullopt;
  return std::sqrt(speed_m2_ / static_cast<double>(speed_n_ - 1));
}

namespace {

// Maps value/threshold > 1 into (0.5, 1).
double exceedance_score(double value, double threshold) {
  if (threshold <= 0.0) return 1.0;
  return 0.5 + 0.5 * (1.0 - threshold / value);
}

}  // namespace

std::optional<double> detect_loitering(const MotionFeatures& f, const RuleParams& p) {
  if (!(f.confinement_radius < p.still_radius) || f.window_len < p.still_frames) {
    return std::nullopt;
  }
  const double tightness = 1.0 - f.confinement_radius / p.still_radius;
  const double duration = 1.0 - p.still_frames / (2.0 * f.window_len);
  return 0.5 + 0.5 * tightness * duration;
}

double fast_motion_threshold(const SceneStats& scene, const RuleParams& p) {
  const auto sigma = scene.speed_std();
  if (!sigma || scene.speed_samples() < static_cast<std::size_t>(p.min_population_samples)) {
    return p.abs_speed;
  }
  return scene.speed_mean() + p.k_sigma * *sigma;
}

std::optional<double> detect_fast_motion(const MotionFeatures& f, const SceneStats& scene,
                                         const RuleParams& p) {
  const double threshold = fast_motion_threshold(scene, p);
  if (!(f.mean_speed > threshold)) return std::nullopt;
  return exceedance_score(f.mean_speed, threshold);
}

std::optional<double> detect_circular(const MotionFeatures& f, const RuleParams& p) {
  const double turns = std::abs(f.winding);
  // The tolerance absorbs rounding in the winding sum of an exactly closed loop.
  if (turns < p.min_winding - 1e-9) return std::nullopt;
  if (!(f.net_displacement < p.closure_frac * f.path_length)) return std::nullopt;
  if (f.mean_speed < p.min_circle_speed || f.confinement_radius < p.min_circle_radius) {
    return std::nullopt;
  }
  return 0.5 + 0.5 * turns / (turns + p.min_winding);
}

VerticalExcursion vertical_excursion(std::span<const TrajectoryPoint> window, double span_frac) {
  VerticalExcursion out;
  if (window.size() < 3) return out;
  const auto& a = window.front();
  const auto& b = window.back();
  const double span = static_cast<double>(b.frame - a.frame);
  std::vector<double> dev(window.size());
  double hi = 0.0;
  double lo = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double t = static_cast<double>(window[i].frame - a.frame) / span;
    const double chord = a.observation.v + t * (b.observation.v - a.observation.v);
    dev[i] = window[i].observation.v - chord;
    hi = std::max(hi, dev[i]);
    lo = std::min(lo, dev[i]);
  }
  const double sign = hi >= -lo ? 1.0 : -1.0;
  out.excursion = sign > 0 ? hi : -lo;
  out.opposite = sign > 0 ? -lo : hi;

  const double cut = span_frac * out.excursion;
  bool found = false;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (sign * dev[i] >= cut) {
      if (!found) out.span_start = window[i].frame;
      out.span_end = window[i].frame;
      found = true;
    }
  }
  if (!found) out.span_start = out.span_end = b.frame;
  return out;
}

double jump_threshold(const SceneStats& scene, const RuleParams& p) {
  return std::max(p.jump_factor * scene.vertical_mean(), p.min_jump_px);
}

namespace {

std::span<const TrajectoryPoint> trailing(std::span<const TrajectoryPoint> history, int frames) {
  if (history.empty()) return history;
  const std::int64_t first = history.back().frame - frames + 1;
  std::size_t k = history.size();
  while (k > 0 && history[k - 1].frame >= first) --k;
  return history.subspan(k);
}

}  // namespace

std::optional<double> detect_jump(std::span<const TrajectoryPoint> history,
                                  const SceneStats& scene, const RuleParams& p) {
  const auto window = trailing(history, p.jump_window);
  if (window.size() < 3) return std::nullopt;
  const VerticalExcursion ex = vertical_excursion(window, p.jump_span_frac);
  const double threshold = jump_threshold(scene, p);
  if (!(ex.excursion > threshold) || ex.opposite > 0.5 * ex.excursion) return std::nullopt;
  return exceedance_score(ex.excursion, threshold);
}

namespace {

struct Point {
  double u = 0.0;
  double v = 0.0;
};

// Latest sample at or before `frame`.
std::optional<Point> position_at(const TrackWindow& t, std::int64_t frame) {
  auto it = std::upper_bound(t.points.begin(), t.points.end(), frame,
                             [](std::int64_t f, const TrajectoryPoint& p) { return f < p.frame; });
  if (it == t.points.begin()) return std::nullopt;
  --it;
  return Point{it->observation.u, it->observation.v};
}

double dist(const Point& a, const Point& b) { return std::hypot(a.u - b.u, a.v - b.v); }

enum class GroupMode { kGather, kDisperse };

struct Candidate {
  TrackId id;
  std::array<Point, 4> checkpoints;  // chronological
  std::int64_t last_seen;
};

std::optional<AnomalyEvent> detect_group(std::span<const TrackWindow> tracks, std::int64_t frame,
                                         const RuleParams& p, GroupMode mode) {
  const std::int64_t start = frame - p.converge_frames;
  const std::array<std::int64_t, 4> times = {start, start + p.converge_frames / 3,
                                             start + 2 * p.converge_frames / 3, frame};
  std::vector<Candidate> cands;
  for (const auto& t : tracks) {
    // Tracks not observed since the previous group evaluation are stale.
    auto last = std::upper_bound(t.points.begin(), t.points.end(), frame,
                                 [](std::int64_t f, const TrajectoryPoint& q) { return f < q.frame; });
    if (last == t.points.begin() || std::prev(last)->frame < frame - p.eval_stride) continue;
    Candidate c{t.id, {}, std::prev(last)->frame};
    bool ok = true;
    for (std::size_t k = 0; k < times.size() && ok; ++k) {
      const auto pos = position_at(t, times[k]);
      if (!pos) ok = false;
      else c.checkpoints[k] = *pos;
    }
    if (ok) cands.push_back(c);
  }
  if (cands.size() < static_cast<std::size_t>(p.min_group)) return std::nullopt;

  // The meeting point is observed at the window end for a gathering and at the
  // window start for a dispersion.
  const std::size_t ref = mode == GroupMode::kGather ? 3 : 0;

  // Single-linkage clusters over the reference positions. Two tracks within
  // meet_radius of a shared centroid are at most 2 * meet_radius apart.
  const std::size_t n = cands.size();
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (label[i] != label[j] &&
            dist(cands[i].checkpoints[ref], cands[j].checkpoints[ref]) <= 2.0 * p.meet_radius) {
          const std::size_t lo = std::min(label[i], label[j]);
          label[i] = label[j] = lo;
          changed = true;
        }
      }
    }
  }

  std::optional<AnomalyEvent> best;
  double best_approach = 0.0;
  const double tol = 0.1 * std::max(p.min_approach, 1.0);
  for (std::size_t root = 0; root < n; ++root) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] == root) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(p.min_group)) continue;

    // Peel off the non-qualifying member farthest from the centroid until
    // every remaining member qualifies.
    double approach_sum = 0.0;
    while (members.size() >= static_cast<std::size_t>(p.min_group)) {
      // Centroid of the members at every checkpoint, so a group walking in
      // formation keeps its distances.
      std::array<Point, 4> c{};
      for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t i : members) {
          c[k].u += cands[i].checkpoints[k].u;
          c[k].v += cands[i].checkpoints[k].v;
        }
        c[k].u /= static_cast<double>(members.size());
        c[k].v /= static_cast<double>(members.size());
      }

      approach_sum = 0.0;
      std::optional<std::size_t> worst;
      double worst_dist = -1.0;
      for (std::size_t m = 0; m < members.size(); ++m) {
        const auto& cp = cands[members[m]].checkpoints;
        std::array<double, 4> d{};
        for (std::size_t k = 0; k < 4; ++k) d[k] = dist(cp[k], c[k]);
        const double ref_dist = d[ref];
        if (mode == GroupMode::kDisperse) std::reverse(d.begin(), d.end());
        // d is now ordered so that a qualifying track closes in on c.
        bool monotone = true;
        for (std::size_t k = 1; k < 4; ++k) monotone = monotone && d[k] <= d[k - 1] + tol;
        const double approach = d[0] - d[3];
        const bool ok = ref_dist <= p.meet_radius && monotone && approach >= p.min_approach &&
                        approach > 0.0;
        if (ok) {
          approach_sum += approach;
        } else if (ref_dist > worst_dist) {
          worst = m;
          worst_dist = ref_dist;
        }
      }
      if (!worst) break;
      members.erase(members.begin() + static_cast<std::ptrdiff_t>(*worst));
    }
    if (members.size() < static_cast<std::size_t>(p.min_group)) continue;

    const double mean_approach = approach_sum / static_cast<double>(members.size());
    if (best && (members.size() < best->track_ids.size() ||
                 (members.size() == best->track_ids.size() && mean_approach <= best_approach))) {
      continue;
    }
    AnomalyEvent ev;
    ev.code = mode == GroupMode::kGather ? AnomalyCode::kGather : AnomalyCode::kDisperse;
    for (std::size_t i : members) ev.track_ids.push_back(cands[i].id);
    std::sort(ev.track_ids.begin(), ev.track_ids.end());
    ev.frame_start = start;
    ev.frame_end = start;
    for (std::size_t i : members) ev.frame_end = std::max(ev.frame_end, cands[i].last_seen);
    ev.score = 0.5 + 0.5 * std::min(1.0, mean_approach / p.meet_radius);
    best = std::move(ev);
    best_approach = mean_approach;
  }
  return best;
}

}  // namespace

std::optional<AnomalyEvent> detect_gathering(std::span<const TrackWindow> tracks, std::int64_t frame,
                                             const RuleParams& p) {
  return detect_group(tracks, frame, p, GroupMode::kGather);
}

std::optional<AnomalyEvent> detect_dispersion(std::span<const TrackWindow> tracks,
                                              std::int64_t frame, const RuleParams& p) {
  return detect_group(tracks, frame, p, GroupMode::kDisperse);
}

double frame_regularity_score(std::span<const AnomalyEvent> events, std::int64_t frame) {
  double score = 0.0;
  for (const auto& e : events) {
    if (e.frame_start <= frame && frame <= e.frame_end) score = std::max(score, e.score);
  }
  return score;
}

std::vector<double> frame_scores(std::span<const AnomalyEvent> events, std::int64_t frame_count) {
  std::vector<double> scores(static_cast<std::size_t>(std::max<std::int64_t>(frame_count, 0)), 0.0);
  for (const auto& e : events) {
    const std::int64_t lo = std::max<std::int64_t>(e.frame_start, 0);
    const std::int64_t hi = std::min<std::int64_t>(e.frame_end, frame_count - 1);
    for (std::int64_t f = lo; f <= hi; ++f) {
      auto& s = scores[static_cast<std::size_t>(f)];
      s = std::max(s, e.score);
    }
  }
  return scores;
}

void write_event_log(std::ostream& out, std::span<const AnomalyEvent> events) {
  out << "# frame_start,frame_end,code,score,track_ids\n";
  for (const auto& e : events) {
    out << e.frame_start << ',' << e.frame_end << ',' << static_cast<int>(e.code) << ','
        << std::fixed << std::setprecision(6) << e.score << std::defaultfloat << ',';
    for (std::size_t i = 0; i < e.track_ids.size(); ++i) {
      if (i) out << ';';
      out << e.track_ids[i];
    }
    out << '\n';
  }
}

std::vector<AnomalyEvent> read_event_log(std::istream& in) {
  std::vector<AnomalyEvent> events;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    AnomalyEvent e;
    int code = -1;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(ss >> e.frame_start >> c1 >> e.frame_end >> c2 >> code >> c3 >> e.score >> c4) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || code < 0 || code >= kAnomalyClassCount) {
      throw AnomalyError("malformed event log line " + std::to_string(lineno));
    }
    e.code = static_cast<AnomalyCode>(code);
    std::string ids;
    std::getline(ss, ids);
    std::istringstream is(ids);
    std::string tok;
    while (std::getline(is, tok, ';')) {
      if (!tok.empty()) e.track_ids.push_back(std::stoull(tok));
    }
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace edgewatch
