#include "edgewatch/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace edgewatch {

double frame_auc(const EvalRecord& rec) {
  if (rec.scores.size() != rec.labels.size()) {
    throw EvaluationError("score count " + std::to_string(rec.scores.size()) +
                          " does not match label count " + std::to_string(rec.labels.size()));
  }
  const std::size_t n = rec.scores.size();
  const auto positives = static_cast<std::size_t>(std::count(rec.labels.begin(), rec.labels.end(), true));
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw EvaluationError("AUC is undefined when labels contain a single class");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rec.scores[a] < rec.scores[b]; });

  // Ranks are 1-based; tied scores share the mean of their ranks. Twice the
  // rank keeps every quantity integral.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && rec.scores[order[j]] == rec.scores[order[i]]) ++j;
    const std::uint64_t twice_avg = (i + 1) + j;
    for (std::size_t k = i; k < j; ++k) {
      if (rec.labels[order[k]]) twice_rank_sum += twice_avg;
    }
    i = j;
  }
  const std::uint64_t twice_u = twice_rank_sum - positives * (positives + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) *
                                          static_cast<double>(negatives));
}

TimingPrediction predict_time(const TimingModel& model, std::int64_t d_k) {
  if (d_k < 0) throw std::invalid_argument("detection count must be non-negative");
  if (model.od_ms < 0 || model.fe_ms < 0 || model.ta_ms < 0) {
    throw std::invalid_argument("timing model costs must be non-negative");
  }
  TimingPrediction p;
  p.tau_ms = (model.od_ms + model.ta_ms) + model.fe_ms * static_cast<double>(d_k);
  p.fps = p.tau_ms > 0 ? 1000.0 / p.tau_ms : 0.0;
  return p;
}

EvalCase scenario_case(const std::string& name, const Scenario& scenario) {
  auto shared = std::make_shared<const Scenario>(scenario);
  EvalCase c;
  c.name = name;
  c.frames = shared->frames;
  c.labels = shared->labels;
  c.patches = [shared](std::int64_t frame, std::size_t index) {
    return render_patch(*shared, frame, index);
  };
  return c;
}

std::vector<EvalCase> suite_cases(std::uint64_t seed) {
  std::vector<EvalCase> cases;
  for (const auto& s : standard_suite()) {
    cases.push_back(scenario_case(s.name, generate_scenario(s.spec, seed)));
  }
  return cases;
}

std::vector<double> case_scores(const EvalCase& c, const PipelineConfig& config) {
  const RunResult run = run_pipeline(c.frames, config, {}, c.patches);
  return frame_scores(run.events, static_cast<std::int64_t>(c.labels.size()));
}

SuiteScore evaluate_cases(const std::vector<EvalCase>& cases, const PipelineConfig& config) {
  SuiteScore out;
  EvalRecord pooled;
  for (const auto& c : cases) {
    EvalRecord rec{case_scores(c, config), c.labels};
    out.cases.push_back({c.name, frame_auc(rec)});
    pooled.scores.insert(pooled.scores.end(), rec.scores.begin(), rec.scores.end());
    pooled.labels.insert(pooled.labels.end(), rec.labels.begin(), rec.labels.end());
  }
  out.pooled_auc = frame_auc(pooled);
  return out;
}

namespace {

const std::vector<std::string>& association_axes() {
  static const std::vector<std::string> axes{"lambda", "i_max", "n_init", "mahalanobis_gate",
                                             "gallery_capacity"};
  return axes;
}

void apply_association(AssociationConfig& cfg, const std::string& key, double value) {
  auto as_int = [&](double v) {
    if (v != std::floor(v)) throw EvaluationError(key + " must be an integer");
    return static_cast<int>(v);
  };
  if (key == "lambda") {
    cfg.lambda = value;
  } else if (key == "i_max") {
    cfg.i_max = as_int(value);
  } else if (key == "n_init") {
    cfg.n_init = as_int(value);
  } else if (key == "mahalanobis_gate") {
    cfg.mahalanobis_gate = value;
  } else if (key == "gallery_capacity") {
    cfg.gallery_capacity = static_cast<std::size_t>(std::max(0, as_int(value)));
  } else {
    throw EvaluationError("unknown sweep axis '" + key + "'");
  }
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

PipelineConfig point_config(const PipelineConfig& base, const SweepRow& row) {
  PipelineConfig cfg = base;
  cfg.encoder.input_height = row.encoder.input_height;
  cfg.encoder.input_width = row.encoder.input_width;
  cfg.association.max_cos_distance = row.max_cos_distance;
  cfg.nms_overlap = row.nms_overlap;
  for (const auto& [key, value] : row.association) apply_association(cfg.association, key, value);
  return cfg;
}

std::vector<SweepRow> expand(const PipelineConfig& base, const SweepConfig& sweep) {
  std::vector<EncoderSpec> encoders = sweep.encoders;
  if (encoders.empty()) encoders.push_back(base.encoder);
  std::sort(encoders.begin(), encoders.end(), [](const EncoderSpec& a, const EncoderSpec& b) {
    return std::tie(a.input_height, a.input_width) < std::tie(b.input_height, b.input_width);
  });
  encoders.erase(std::unique(encoders.begin(), encoders.end(),
                             [](const EncoderSpec& a, const EncoderSpec& b) {
                               return a.input_height == b.input_height &&
                                      a.input_width == b.input_width;
                             }),
                 encoders.end());
  const auto cos = sweep.max_cos_distance.empty()
                       ? std::vector<double>{base.association.max_cos_distance}
                       : sorted_unique(sweep.max_cos_distance);
  const auto overlap =
      sweep.nms_overlap.empty() ? std::vector<double>{base.nms_overlap} : sorted_unique(sweep.nms_overlap);

  std::vector<std::vector<std::pair<std::string, double>>> extras{{}};
  for (const auto& [key, values] : sweep.association) {
    std::vector<std::vector<std::pair<std::string, double>>> next;
    for (const auto& prefix : extras) {
      for (double v : sorted_unique(values)) {
        auto row = prefix;
        row.emplace_back(key, v);
        next.push_back(std::move(row));
      }
    }
    extras = std::move(next);
  }

  std::vector<SweepRow> rows;
  for (const auto& e : encoders) {
    for (double c : cos) {
      for (double o : overlap) {
        for (const auto& x : extras) {
          SweepRow r;
          r.encoder = e;
          r.max_cos_distance = c;
          r.nms_overlap = o;
          r.association = x;
          rows.push_back(std::move(r));
        }
      }
    }
  }
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

SweepConfig SweepConfig::parse(const std::string& json_text) {
  using nlohmann::json;
  SweepConfig s;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw EvaluationError(std::string("malformed grid file: ") + e.what());
  }
  if (!j.is_object() || j.empty()) throw EvaluationError("grid file must be a non-empty JSON object");
  auto numbers = [](const json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) throw EvaluationError("grid axis '" + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw EvaluationError("grid axis '" + key + "' must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "encoder_size") {
      if (!value.is_array() || value.empty()) {
        throw EvaluationError("grid axis 'encoder_size' must be a non-empty array");
      }
      for (const auto& x : value) {
        if (!x.is_string()) throw EvaluationError("encoder sizes must be strings like \"64x32\"");
        try {
          s.encoders.push_back(parse_encoder_size(x.get<std::string>()));
        } catch (const std::exception& e) {
          throw EvaluationError(e.what());
        }
      }
    } else if (key == "max_cos_distance") {
      s.max_cos_distance = numbers(value, key);
    } else if (key == "nms_overlap") {
      s.nms_overlap = numbers(value, key);
    } else if (std::find(association_axes().begin(), association_axes().end(), key) !=
               association_axes().end()) {
      s.association[key] = numbers(value, key);
    } else {
      throw EvaluationError("unknown grid axis '" + key + "'");
    }
  }
  return s;
}

void SweepConfig::validate(const PipelineConfig& base) const {
  for (const auto& row : expand(base, *this)) {
    try {
      point_config(base, row).validate();
    } catch (const std::invalid_argument& e) {
      throw EvaluationError(std::string("invalid grid point: ") + e.what());
    }
  }
}

std::vector<SweepRow> run_sweep(const std::vector<EvalCase>& cases, const PipelineConfig& base,
                                const SweepConfig& sweep, unsigned jobs) {
  std::vector<SweepRow> rows = expand(base, sweep);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        rows[i].auc = evaluate_cases(cases, point_config(base, rows[i])).pooled_auc;
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "encoder,max_cos_distance,nms_overlap";
  if (!rows.empty()) {
    for (const auto& [key, value] : rows.front().association) out << ',' << key;
  }
  out << ",auc,status\n";
  char auc[32];
  for (const auto& r : rows) {
    out << r.encoder.input_height << 'x' << r.encoder.input_width << ','
        << format_number(r.max_cos_distance) << ',' << format_number(r.nms_overlap);
    for (const auto& [key, value] : r.association) out << ',' << format_number(value);
    if (r.auc) {
      std::snprintf(auc, sizeof auc, "%.4f", *r.auc);
      out << ',' << auc << ",ok\n";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",,error: " << msg << '\n';
    }
  }
}

namespace {

StageSummary summarize(std::vector<double> samples) {
  StageSummary s;
  if (samples.empty()) return s;
  s.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  s.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

}  // namespace

BenchReport summarize_timings(const std::vector<StageTimes>& timings, std::size_t detections) {
  BenchReport r;
  r.frames = timings.size();
  r.detections = detections;
  std::vector<double> ingest, associate, anomaly, alert, both, total;
  for (const auto& t : timings) {
    ingest.push_back(t.ingest_ms);
    associate.push_back(t.associate_ms);
    anomaly.push_back(t.anomaly_ms);
    alert.push_back(t.alert_ms);
    both.push_back(t.associate_ms + t.anomaly_ms);
    total.push_back(t.ingest_ms + t.associate_ms + t.anomaly_ms + t.alert_ms);
  }
  r.ingest = summarize(ingest);
  r.associate = summarize(associate);
  r.anomaly = summarize(anomaly);
  r.alert = summarize(alert);
  r.associate_anomaly = summarize(both);
  r.total = summarize(total);
  r.fps = r.total.mean_ms > 0 ? 1000.0 / r.total.mean_ms : 0.0;
  return r;
}

BenchReport bench(const EvalCase& workload, const PipelineConfig& config) {
  std::size_t detections = 0;
  for (const auto& b : workload.frames) detections += b.detections.size();
  const RunResult run = run_pipeline(workload.frames, config, {}, workload.patches);
  return summarize_timings(run.timings, detections);
}

void write_bench_report(std::ostream& out, const BenchReport& r) {
  char buf[128];
  out << "frames: " << r.frames << '\n';
  out << "detections: " << r.detections << '\n';
  auto stage = [&](const char* name, const StageSummary& s) {
    std::snprintf(buf, sizeof buf, "%s: mean_ms=%.4f p95_ms=%.4f\n", name, s.mean_ms, s.p95_ms);
    out << buf;
  };
  stage("ingest", r.ingest);
  stage("associate", r.associate);
  stage("anomaly", r.anomaly);
  stage("alert", r.alert);
  stage("associate+anomaly", r.associate_anomaly);
  stage("total", r.total);
  std::snprintf(buf, sizeof buf, "fps: %.2f\n", r.fps);
  out << buf;
}

}  // namespace edgewatch
