#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "edgewatch/alerting.hpp"
#include "edgewatch/anomaly_engine.hpp"
#include "edgewatch/association.hpp"
#include "edgewatch/ingestion.hpp"

namespace edgewatch {

enum class AppearanceSource {
  kProvided,  // descriptors arrive with the detections
  kEncoder,   // descriptors are computed from image patches
};

struct PipelineConfig {
  AssociationConfig association;
  AnomalyEngineOptions anomaly;
  EncoderSpec encoder;
  AppearanceSource appearance = AppearanceSource::kProvided;
  double nms_overlap = 0.3;
  /// Alert timestamps are epoch_base + frame / fps seconds.
  double fps = 25.0;
  std::uint32_t epoch_base = 0;
  std::uint16_t node_id = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Supplies the image patch of detection `index` in frame `frame` (index into
/// the batch before NMS).
using PatchSource = std::function<ImagePatch(std::int64_t frame, std::size_t index)>;

struct StageTimes {
  double ingest_ms = 0.0;  // NMS and feature encoding
  double associate_ms = 0.0;
  double anomaly_ms = 0.0;
  double alert_ms = 0.0;
};

struct TrackLogRow {
  std::int64_t frame = 0;
  TrackId id = 0;
  BoundingBox box;
};

struct FrameOutput {
  std::vector<TrackLogRow> tracks;
  std::vector<AnomalyEvent> opened;
  std::vector<DeliveryReport> deliveries;
  StageTimes times;
};

/// One stream: NMS, optional encoding, tracking, anomaly rules, alerts.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::vector<std::unique_ptr<AlertSink>> sinks = {},
                    PatchSource patches = {});

  /// Frames must be strictly increasing.
  FrameOutput process(const FrameBatch& batch);
  void finish();

  const AnomalyEngine& engine() const { return engine_; }
  const Tracker& tracker() const { return tracker_; }
  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
  std::vector<std::unique_ptr<AlertSink>> sinks_;
  PatchSource patches_;
  std::unique_ptr<Encoder> encoder_;
  Tracker tracker_;
  AnomalyEngine engine_;
};

struct RunResult {
  std::vector<TrackLogRow> track_log;
  std::vector<AnomalyEvent> events;
  std::vector<StageTimes> timings;
  std::size_t alerts = 0;
  std::size_t delivery_failures = 0;
};

RunResult run_pipeline(const std::vector<FrameBatch>& frames, const PipelineConfig& config,
                       std::vector<std::unique_ptr<AlertSink>> sinks = {},
                       PatchSource patches = {});

inline constexpr const char* kTrackLogHeader = "# frame,id,x,y,w,h\n";

/// `frame,id,x,y,w,h` rows with three decimals, no header.
void write_track_log_rows(std::ostream& out, const std::vector<TrackLogRow>& rows);
void write_track_log(std::ostream& out, const std::vector<TrackLogRow>& rows);

}  // namespace edgewatch
