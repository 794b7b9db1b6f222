#include "edgewatch/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace edgewatch {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool skip_line(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

[[noreturn]] void fail(int lineno, const std::string& what) {
  throw IngestionError("line " + std::to_string(lineno) + ": " + what);
}

double to_double(std::string_view field, int lineno, const char* name) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    fail(lineno, std::string("cannot parse ") + name + " '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) fail(lineno, std::string(name) + " is not finite");
  return value;
}

std::int64_t to_int(std::string_view field, int lineno, const char* name) {
  field = trim(field);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    fail(lineno, std::string("cannot parse ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

Detection parse_detection_row(std::string_view line, int lineno) {
  const auto fields = split(line, ',');
  if (fields.size() != 7) {
    fail(lineno, "expected 7 fields (frame,id,x,y,w,h,confidence), got " +
                     std::to_string(fields.size()));
  }
  Detection d;
  d.frame = to_int(fields[0], lineno, "frame");
  if (d.frame < 0) fail(lineno, "frame must be non-negative");
  to_double(fields[1], lineno, "id");
  d.box = {to_double(fields[2], lineno, "x"), to_double(fields[3], lineno, "y"),
           to_double(fields[4], lineno, "w"), to_double(fields[5], lineno, "h")};
  if (d.box.w <= 0.0) fail(lineno, "box width must be positive");
  if (d.box.h <= 0.0) fail(lineno, "box height must be positive");
  d.confidence = to_double(fields[6], lineno, "confidence");
  if (d.confidence < 0.0 || d.confidence > 1.0) fail(lineno, "confidence must lie in [0, 1]");
  return d;
}

}  // namespace

std::vector<FrameBatch> parse_detections(std::istream& in) {
  std::map<std::int64_t, std::vector<Detection>> grouped;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    Detection d = parse_detection_row(line, lineno);
    grouped[d.frame].push_back(std::move(d));
  }
  std::vector<FrameBatch> out;
  out.reserve(grouped.size());
  for (auto& [frame, dets] : grouped) out.push_back({frame, std::move(dets)});
  return out;
}

void write_detections(std::ostream& out, const std::vector<FrameBatch>& frames) {
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& batch : frames) {
    for (const auto& d : batch.detections) {
      buf << d.frame << ",-1," << d.box.x << ',' << d.box.y << ',' << d.box.w << ',' << d.box.h
          << ',' << d.confidence << '\n';
    }
  }
  out << buf.str();
}

std::optional<FrameBatch> DetectionStream::next() {
  std::string line;
  while (true) {
    if (!pending_) {
      if (!std::getline(in_, line)) return std::nullopt;
      ++lineno_;
      if (skip_line(line)) continue;
      pending_ = parse_detection_row(line, lineno_);
      if (pending_->frame <= last_frame_) {
        fail(lineno_, "frame " + std::to_string(pending_->frame) + " arrives after frame " +
                          std::to_string(last_frame_));
      }
    }
    FrameBatch batch{pending_->frame, {std::move(*pending_)}};
    pending_.reset();
    while (std::getline(in_, line)) {
      ++lineno_;
      if (skip_line(line)) continue;
      Detection d = parse_detection_row(line, lineno_);
      if (d.frame == batch.frame) {
        batch.detections.push_back(std::move(d));
        continue;
      }
      if (d.frame < batch.frame) {
        fail(lineno_, "frame " + std::to_string(d.frame) + " arrives after frame " +
                          std::to_string(batch.frame));
      }
      pending_ = std::move(d);
      break;
    }
    last_frame_ = batch.frame;
    return batch;
  }
}

DescriptorTable parse_descriptors(std::istream& in) {
  DescriptorTable table;
  std::string line;
  int lineno = 0;
  std::vector<double> values;
  values.reserve(kDescriptorDim);
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 2 + kDescriptorDim) {
      fail(lineno, "expected 128 descriptor values, got " +
                       std::to_string(fields.size() < 2 ? 0 : fields.size() - 2));
    }
    const std::int64_t frame = to_int(fields[0], lineno, "frame");
    const std::int64_t index = to_int(fields[1], lineno, "det_index");
    if (frame < 0 || index < 0) fail(lineno, "frame and det_index must be non-negative");
    values.clear();
    for (std::size_t i = 0; i < kDescriptorDim; ++i) {
      values.push_back(to_double(fields[2 + i], lineno, "descriptor value"));
    }
    try {
      table.insert_or_assign({frame, static_cast<std::size_t>(index)},
                             Descriptor::normalized(values));
    } catch (const AppearanceError& e) {
      fail(lineno, e.what());
    }
  }
  return table;
}

void write_descriptors(std::ostream& out, const std::vector<FrameBatch>& frames) {
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& batch : frames) {
    for (std::size_t i = 0; i < batch.detections.size(); ++i) {
      const auto& d = batch.detections[i];
      if (!d.descriptor) continue;
      buf << batch.frame << ',' << i;
      for (double v : d.descriptor->values()) buf << ',' << v;
      buf << '\n';
    }
  }
  out << buf.str();
}

void attach_descriptors(std::vector<FrameBatch>& frames, const DescriptorTable& table) {
  for (auto& batch : frames) {
    for (std::size_t i = 0; i < batch.detections.size(); ++i) {
      const auto it = table.find({batch.frame, i});
      if (it == table.end()) {
        throw IngestionError("no descriptor for detection " + std::to_string(i) + " of frame " +
                             std::to_string(batch.frame));
      }
      batch.detections[i].descriptor = it->second;
    }
  }
}

std::vector<bool> parse_labels(std::istream& in) {
  std::vector<bool> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = split(line, ',');
    std::string_view value = fields.back();
    if (fields.size() == 2) {
      const std::int64_t frame = to_int(fields[0], lineno, "frame");
      if (frame != static_cast<std::int64_t>(labels.size())) {
        fail(lineno, "labels must list frames 0, 1, 2, ... in order");
      }
    } else if (fields.size() != 1) {
      fail(lineno, "expected 'label' or 'frame,label'");
    }
    const std::int64_t v = to_int(value, lineno, "label");
    if (v != 0 && v != 1) fail(lineno, "label must be 0 or 1");
    labels.push_back(v == 1);
  }
  return labels;
}

std::vector<FrameBatch> fill_frame_gaps(std::vector<FrameBatch> frames, std::int64_t first,
                                        std::int64_t last) {
  std::vector<FrameBatch> out;
  if (last < first) return out;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  std::size_t k = 0;
  for (std::int64_t f = first; f <= last; ++f) {
    while (k < frames.size() && frames[k].frame < f) ++k;
    if (k < frames.size() && frames[k].frame == f) {
      out.push_back(std::move(frames[k]));
    } else {
      out.push_back({f, {}});
    }
  }
  return out;
}

}  // namespace edgewatch
