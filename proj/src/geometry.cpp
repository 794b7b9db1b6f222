#include "edgewatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edgewatch {

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 &&
         h > 0.0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double overlap_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<bool> suppressed(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t cur = order[i];
    if (suppressed[cur]) continue;
    kept.push_back(dets[cur]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t other = order[j];
      if (!suppressed[other] && iou(dets[cur].box, dets[other].box) > overlap_threshold) {
        suppressed[other] = true;
      }
    }
  }
  return kept;
}

Observation to_observation(const BoundingBox& box) {
  return {box.x + box.w / 2.0, box.y + box.h / 2.0, box.w / box.h, box.h};
}

BoundingBox to_box(const Observation& obs) {
  const double w = obs.gamma * obs.h;
  return {obs.u - w / 2.0, obs.v - obs.h / 2.0, w, obs.h};
}

}  // namespace edgewatch
