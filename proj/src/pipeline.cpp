#include "edgewatch/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace edgewatch {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

void PipelineConfig::validate() const {
  association.validate();
  anomaly.validate();
  if (!(nms_overlap >= 0.0 && nms_overlap <= 1.0)) {
    throw std::invalid_argument("nms_overlap must lie in [0, 1]");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) throw std::invalid_argument("fps must be positive");
  if (encoder.input_height <= 0 || encoder.input_width <= 0) {
    throw std::invalid_argument("encoder size must be positive");
  }
  if (appearance == AppearanceSource::kEncoder) {
    try {
      make_encoder(encoder);
    } catch (const AppearanceError& e) {
      throw std::invalid_argument(e.what());
    }
  }
}

Pipeline::Pipeline(PipelineConfig config, std::vector<std::unique_ptr<AlertSink>> sinks,
                   PatchSource patches)
    : config_(std::move(config)),
      sinks_(std::move(sinks)),
      patches_(std::move(patches)),
      tracker_(config_.association),
      engine_(config_.anomaly) {
  config_.validate();
  if (config_.appearance == AppearanceSource::kEncoder) {
    if (!patches_) throw std::invalid_argument("encoder appearance needs an image patch source");
    encoder_ = make_encoder(config_.encoder);
  }
}

FrameOutput Pipeline::process(const FrameBatch& batch) {
  FrameOutput out;

  auto t0 = Clock::now();
  std::vector<Detection> dets = batch.detections;
  if (encoder_) {
    for (std::size_t i = 0; i < dets.size(); ++i) {
      dets[i].descriptor = encoder_->encode(patches_(batch.frame, i));
    }
  }
  dets = nms(dets, config_.nms_overlap);
  out.times.ingest_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const FrameResult result = tracker_.step(batch.frame, dets);
  out.times.associate_ms = elapsed_ms(t0);

  t0 = Clock::now();
  out.opened = engine_.process(result);
  out.times.anomaly_ms = elapsed_ms(t0);

  t0 = Clock::now();
  if (!sinks_.empty()) {
    const auto ts = static_cast<std::uint32_t>(
        config_.epoch_base +
        static_cast<std::uint64_t>(std::floor(static_cast<double>(batch.frame) / config_.fps)));
    for (const auto& event : out.opened) {
      out.deliveries.push_back(dispatch(make_alert(event, config_.node_id, ts), sinks_));
    }
  }
  out.times.alert_ms = elapsed_ms(t0);

  for (const auto& snap : result.active_tracks) {
    if (!snap.updated) continue;
    out.tracks.push_back({batch.frame, snap.id, to_box(to_observation(Vector4(snap.state.mean.head<4>())))});
  }
  return out;
}

void Pipeline::finish() { engine_.finish(); }

RunResult run_pipeline(const std::vector<FrameBatch>& frames, const PipelineConfig& config,
                       std::vector<std::unique_ptr<AlertSink>> sinks, PatchSource patches) {
  Pipeline pipeline(config, std::move(sinks), std::move(patches));
  RunResult run;
  run.timings.reserve(frames.size());
  for (const auto& batch : frames) {
    FrameOutput out = pipeline.process(batch);
    run.track_log.insert(run.track_log.end(), out.tracks.begin(), out.tracks.end());
    run.timings.push_back(out.times);
    run.alerts += out.deliveries.size();
    for (const auto& report : out.deliveries) {
      for (const auto& r : report.results) run.delivery_failures += r.ok ? 0 : 1;
    }
  }
  pipeline.finish();
  run.events = pipeline.engine().events();
  return run;
}

void write_track_log(std::ostream& out, const std::vector<TrackLogRow>& rows) {
  out << kTrackLogHeader;
  write_track_log_rows(out, rows);
}

void write_track_log_rows(std::ostream& out, const std::vector<TrackLogRow>& rows) {
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%llu,%.3f,%.3f,%.3f,%.3f\n",
                  static_cast<long long>(r.frame), static_cast<unsigned long long>(r.id), r.box.x,
                  r.box.y, r.box.w, r.box.h);
    out << buf;
  }
}

}  // namespace edgewatch
