#include <algorithm>
#include <cmath>
#include <numbers>

#include "edgewatch/anomaly.hpp"

namespace edgewatch {

namespace {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a > std::numbers::pi) a -= two_pi;
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

}  // namespace

const char* to_string(AnomalyCode code) {
  switch (code) {
    case AnomalyCode::kLoiter: return "loiter";
    case AnomalyCode::kFast: return "fast";
    case AnomalyCode::kCircular: return "circular";
    case AnomalyCode::kJump: return "jump";
    case AnomalyCode::kGather: return "gather";
    case AnomalyCode::kDisperse: return "disperse";
  }
  return "unknown";
}

MotionFeatures motion_features(std::span<const TrajectoryPoint> window) {
  if (window.size() < 2) throw AnomalyError("feature window needs at least two samples");
  for (std::size_t i = 1; i < window.size(); ++i) {
    if (window[i].frame <= window[i - 1].frame) {
      throw AnomalyError("feature window frames must be strictly increasing");
    }
  }

  MotionFeatures f;
  f.window_len = static_cast<int>(window.back().frame - window.front().frame + 1);

  double speed_sum = 0.0;
  double speed_sq = 0.0;
  double turn_sum = 0.0;
  int heading_steps = 0;
  double prev_heading = 0.0;
  for (std::size_t i = 1; i < window.size(); ++i) {
    const double du = window[i].observation.u - window[i - 1].observation.u;
    const double dv = window[i].observation.v - window[i - 1].observation.v;
    const double step = std::hypot(du, dv);
    const double speed = step / static_cast<double>(window[i].frame - window[i - 1].frame);
    f.path_length += step;
    speed_sum += speed;
    speed_sq += speed * speed;
    if (step > 0.0) {
      const double heading = std::atan2(dv, du);
      if (heading_steps > 0) turn_sum += wrap_angle(heading - prev_heading);
      prev_heading = heading;
      ++heading_steps;
    }
  }
  const auto steps = static_cast<double>(window.size() - 1);
  f.mean_speed = speed_sum / steps;
  f.speed_std = std::sqrt(std::max(0.0, speed_sq / steps - f.mean_speed * f.mean_speed));
  if (heading_steps >= 2) {
    f.winding = turn_sum * heading_steps / static_cast<double>(heading_steps - 1);
  }

  const auto& first = window.front().observation;
  const auto& last = window.back().observation;
  f.net_displacement = std::hypot(last.u - first.u, last.v - first.v);
  // Rounding can leave a straight path a hair shorter than its chord.
  f.path_length = std::max(f.path_length, f.net_displacement);

  double cu = 0.0;
  double cv = 0.0;
  double vmin = first.v;
  double vmax = first.v;
  for (const auto& p : window) {
    cu += p.observation.u;
    cv += p.observation.v;
    vmin = std::min(vmin, p.observation.v);
    vmax = std::max(vmax, p.observation.v);
  }
  cu /= static_cast<double>(window.size());
  cv /= static_cast<double>(window.size());
  f.vertical_amplitude = vmax - vmin;
  for (const auto& p : window) {
    f.confinement_radius =
        std::max(f.confinement_radius, std::hypot(p.observation.u - cu, p.observation.v - cv));
  }
  return f;
}

}  // namespace edgewatch
