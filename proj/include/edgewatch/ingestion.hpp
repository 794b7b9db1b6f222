#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "edgewatch/appearance.hpp"
#include "edgewatch/geometry.hpp"

namespace edgewatch {

class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All detections of one frame, in file order.
struct FrameBatch {
  std::int64_t frame = 0;
  std::vector<Detection> detections;
};

/// Parses `frame,id,x,y,w,h,confidence` rows (id is ignored, -1 by
/// convention). Blank lines and lines starting with '#' are skipped. Batches
/// come out frame-ascending; rows of one frame keep their file order.
/// Throws IngestionError naming the line on malformed or invalid rows.
std::vector<FrameBatch> parse_detections(std::istream& in);
void write_detections(std::ostream& out, const std::vector<FrameBatch>& frames);

/// Incremental reader for live input. Rows must arrive grouped by frame in
/// ascending order; a batch is emitted once the next frame starts or the
/// stream ends.
class DetectionStream {
 public:
  explicit DetectionStream(std::istream& in) : in_(in) {}
  /// Throws IngestionError on malformed rows or a frame that goes backwards.
  std::optional<FrameBatch> next();

 private:
  std::istream& in_;
  int lineno_ = 0;
  std::optional<Detection> pending_;
  std::int64_t last_frame_ = -1;
};

using DescriptorKey = std::pair<std::int64_t, std::size_t>;  // (frame, detection index)
using DescriptorTable = std::map<DescriptorKey, Descriptor>;

/// Parses `frame,det_index,v0,...,v127` rows and normalises each vector.
DescriptorTable parse_descriptors(std::istream& in);
void write_descriptors(std::ostream& out, const std::vector<FrameBatch>& frames);

/// Attaches sidecar descriptors by (frame, index within the frame's batch).
/// Throws IngestionError for any detection left without a descriptor.
void attach_descriptors(std::vector<FrameBatch>& frames, const DescriptorTable& table);

/// Parses one label per line ("0"/"1", optionally "frame,label"); line i is
/// frame i.
std::vector<bool> parse_labels(std::istream& in);

/// Inserts empty batches so that frames run contiguously from `first` to
/// `last` inclusive.
std::vector<FrameBatch> fill_frame_gaps(std::vector<FrameBatch> frames, std::int64_t first,
                                        std::int64_t last);

}  // namespace edgewatch
