#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgewatch/pipeline.hpp"
#include "edgewatch/scenario.hpp"

namespace edgewatch {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalRecord {
  std::vector<double> scores;
  std::vector<bool> labels;
};

/// Probability that a random positive frame outscores a random negative one,
/// ties counting one half. Computed from average ranks. Throws
/// EvaluationError on length mismatch or single-class labels.
double frame_auc(const EvalRecord& rec);

struct TimingModel {
  double od_ms = 92.0;  // object detection, per frame
  double fe_ms = 38.0;  // feature encoding, per detection
  double ta_ms = 4.0;   // trajectory association, per frame
};

struct TimingPrediction {
  double tau_ms = 0.0;
  double fps = 0.0;
};

/// tau = od + ta + fe * d_k, fps = 1000 / tau.
TimingPrediction predict_time(const TimingModel& model, std::int64_t d_k);

/// A labelled stream. `patches` is needed when the configuration computes
/// descriptors with the encoder.
struct EvalCase {
  std::string name;
  std::vector<FrameBatch> frames;
  std::vector<bool> labels;
  PatchSource patches;
};

std::vector<EvalCase> suite_cases(std::uint64_t seed);
EvalCase scenario_case(const std::string& name, const Scenario& scenario);

struct CaseScore {
  std::string name;
  double auc = 0.0;
};

struct SuiteScore {
  std::vector<CaseScore> cases;
  /// AUC over the concatenation of every case's frames.
  double pooled_auc = 0.0;
};

/// Frame scores of one case; the result has one entry per label.
std::vector<double> case_scores(const EvalCase& c, const PipelineConfig& config);
SuiteScore evaluate_cases(const std::vector<EvalCase>& cases, const PipelineConfig& config);

/// Cartesian grid over the encoder size, max cosine distance, NMS overlap and
/// any numeric association field (lambda, i_max, n_init, mahalanobis_gate,
/// gallery_capacity).
struct SweepConfig {
  std::vector<EncoderSpec> encoders;
  std::vector<double> max_cos_distance;
  std::vector<double> nms_overlap;
  std::map<std::string, std::vector<double>> association;

  /// Reads {"encoder_size": ["64x32"], "max_cos_distance": [0.9], ...}.
  /// Missing axes take the base configuration's value. Throws
  /// EvaluationError on unknown keys, empty axes or invalid values.
  static SweepConfig parse(const std::string& json_text);
  void validate(const PipelineConfig& base) const;
};

struct SweepRow {
  EncoderSpec encoder;
  double max_cos_distance = 0.0;
  double nms_overlap = 0.0;
  std::vector<std::pair<std::string, double>> association;
  std::optional<double> auc;
  std::string error;
};

/// Rows in ascending configuration order. Grid points run on up to `jobs`
/// threads; a failing point yields a row with an error instead of an AUC.
std::vector<SweepRow> run_sweep(const std::vector<EvalCase>& cases, const PipelineConfig& base,
                                const SweepConfig& sweep, unsigned jobs = 1);
void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

struct StageSummary {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

struct BenchReport {
  std::size_t frames = 0;
  std::size_t detections = 0;
  StageSummary ingest;
  StageSummary associate;
  StageSummary anomaly;
  StageSummary alert;
  StageSummary associate_anomaly;
  StageSummary total;
  double fps = 0.0;
};

BenchReport summarize_timings(const std::vector<StageTimes>& timings, std::size_t detections);
BenchReport bench(const EvalCase& workload, const PipelineConfig& config);
void write_bench_report(std::ostream& out, const BenchReport& report);

}  // namespace edgewatch
