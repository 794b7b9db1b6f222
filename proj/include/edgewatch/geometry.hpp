#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "edgewatch/appearance.hpp"

namespace edgewatch {

// Pixel-space box, (x, y) is the top-left corner.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const;
  double area() const { return w * h; }
  bool operator==(const BoundingBox&) const = default;
};

// Kalman measurement space: box center, aspect ratio w/h and height.
struct Observation {
  double u = 0.0;
  double v = 0.0;
  double gamma = 1.0;
  double h = 1.0;

  bool operator==(const Observation&) const = default;
};

struct Detection {
  std::int64_t frame = 0;
  BoundingBox box;
  double confidence = 0.0;
  std::optional<Descriptor> descriptor;
};

/// Intersection over union. Both boxes must be valid (w, h > 0), so the
/// union is never zero.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Greedy non-maximum suppression. Repeatedly keeps the highest-confidence
/// remaining detection and drops every other detection whose IoU with it is
/// strictly greater than `overlap_threshold`. Equal confidences are resolved
/// in favour of the lower input index. Output is confidence-descending.
std::vector<Detection> nms(const std::vector<Detection>& dets, double overlap_threshold);

Observation to_observation(const BoundingBox& box);
BoundingBox to_box(const Observation& obs);

}  // namespace edgewatch
