// edgewatch: detections in, tracks, anomaly events and alerts out.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "edgewatch/evaluation.hpp"
#include "edgewatch/pipeline.hpp"
#include "edgewatch/scenario.hpp"

using namespace edgewatch;

namespace {

struct Options {
  std::string detections;
  std::string descriptors;
  std::string scenario;
  std::string labels;
  std::uint64_t seed = 0;

  double max_cos_distance = 0.9;
  double nms_overlap = 0.3;
  std::string encoder_size = "64x32";
  std::string appearance = "provided";
  double lambda = 0.0;
  double mahalanobis_gate = 9.4877;
  int i_max = 30;
  int n_init = 3;
  std::size_t gallery_capacity = Gallery::kDefaultCapacity;
  RuleParams rules;
  bool templates = false;
  double template_threshold = 0.95;

  std::uint16_t node_id = 1;
  std::uint32_t epoch_base = 0;
  double fps = 25.0;
  std::vector<std::string> alert_files;
  std::vector<std::string> alert_udp;
  std::string track_log = "tracks.csv";
  std::string event_log = "events.csv";

  TimingModel timing;
  std::string grid;
  std::string table;
  unsigned jobs = 1;
  bool predict = false;
  std::int64_t dk = 0;
  std::string report;

  std::string out_detections = "detections.csv";
  std::string out_descriptors = "descriptors.csv";
  std::string out_labels = "labels.csv";
};

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string env_name(const std::string& flag) {
  std::string out = "EDGEWATCH_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
  return out;
}

template <typename T>
CLI::Option* option(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  return app->add_option("--" + name, var, help)->envname(env_name(name))->capture_default_str();
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
  return app->add_flag("--" + name, var, help)->envname(env_name(name));
}

void add_input(CLI::App* app, Options& o) {
  option(app, "detections", o.detections, "Detection CSV (frame,id,x,y,w,h,confidence), '-' for stdin");
  option(app, "descriptors", o.descriptors, "Descriptor CSV (frame,det_index,v0..v127)")
      ->check(CLI::ExistingFile);
  option(app, "scenario", o.scenario,
         "Synthetic input: suite, loiter, fast, circular, jump, gather, disperse, crowd or a JSON spec");
  option(app, "seed", o.seed, "Seed for synthetic scenarios");
}

void add_tracking(CLI::App* app, Options& o) {
  option(app, "max-cos-distance", o.max_cos_distance, "Appearance gate");
  option(app, "nms-overlap", o.nms_overlap, "NMS IoU threshold");
  option(app, "encoder-size", o.encoder_size, "Feature encoder input, HxW");
  option(app, "appearance", o.appearance, "Descriptor source: provided or encoder")
      ->check(CLI::IsMember({"provided", "encoder"}));
  option(app, "lambda", o.lambda, "Weight of the motion cost");
  option(app, "mahalanobis-gate", o.mahalanobis_gate, "Squared Mahalanobis gate");
  option(app, "i-max", o.i_max, "Frames without association before deletion");
  option(app, "n-init", o.n_init, "Associations needed to confirm a track");
  option(app, "gallery-capacity", o.gallery_capacity, "Descriptors kept per track");

  auto& r = o.rules;
  option(app, "still-radius", r.still_radius, "Loitering radius, px");
  option(app, "still-frames", r.still_frames, "Loitering duration, frames");
  option(app, "loiter-max-window", r.loiter_max_window, "Longest loitering window, frames");
  option(app, "k-sigma", r.k_sigma, "Fast motion: sigmas above the scene mean speed");
  option(app, "abs-speed", r.abs_speed, "Fast motion: speed before scene statistics settle, px/frame");
  option(app, "speed-window", r.speed_window, "Fast motion window, frames");
  option(app, "min-population-samples", r.min_population_samples, "Speed samples before mu + k*sigma applies");
  option(app, "min-winding", r.min_winding, "Circular: heading change, radians");
  option(app, "closure-frac", r.closure_frac, "Circular: net displacement / path length bound");
  option(app, "circle-window", r.circle_window, "Circular window, frames");
  option(app, "min-circle-speed", r.min_circle_speed, "Circular: minimum mean speed, px/frame");
  option(app, "min-circle-radius", r.min_circle_radius, "Circular: minimum radius, px");
  option(app, "jump-factor", r.jump_factor, "Jump: multiple of the scene's mean excursion");
  option(app, "jump-window", r.jump_window, "Jump window, frames");
  option(app, "min-jump-px", r.min_jump_px, "Jump: minimum excursion, px");
  option(app, "jump-span-frac", r.jump_span_frac, "Jump: span covers excursion above this fraction");
  option(app, "meet-radius", r.meet_radius, "Gather/disperse radius, px");
  option(app, "converge-frames", r.converge_frames, "Gather/disperse window, frames");
  option(app, "min-group", r.min_group, "Gather/disperse group size");
  option(app, "min-approach", r.min_approach, "Gather/disperse: minimum radial travel, px");
  option(app, "eval-stride", r.eval_stride, "Frames between group evaluations");
  option(app, "merge-gap", r.merge_gap, "Frames joining hits into one event");
  flag(app, "templates", o.templates, "Also run the template matcher");
  option(app, "template-threshold", o.template_threshold, "Mean template similarity that fires");
}

void add_alerts(CLI::App* app, Options& o) {
  option(app, "node-id", o.node_id, "Node id in alert frames");
  option(app, "epoch-base", o.epoch_base, "Timestamp of frame 0, seconds since epoch");
  option(app, "fps", o.fps, "Frame rate used for alert timestamps");
  option(app, "alert-file", o.alert_files, "Append hex alert frames to this file")->delimiter(',');
  option(app, "alert-udp", o.alert_udp, "Send alert datagrams to host:port")->delimiter(',');
}

PipelineConfig make_config(const Options& o) {
  PipelineConfig cfg;
  cfg.association.max_cos_distance = o.max_cos_distance;
  cfg.association.lambda = o.lambda;
  cfg.association.mahalanobis_gate = o.mahalanobis_gate;
  cfg.association.i_max = o.i_max;
  cfg.association.n_init = o.n_init;
  cfg.association.gallery_capacity = o.gallery_capacity;
  cfg.anomaly.rules = o.rules;
  cfg.anomaly.enable_templates = o.templates;
  cfg.anomaly.template_threshold = o.template_threshold;
  try {
    cfg.encoder = parse_encoder_size(o.encoder_size);
  } catch (const std::exception& e) {
    throw CliError(std::string("--encoder-size: ") + e.what());
  }
  cfg.appearance = o.appearance == "encoder" ? AppearanceSource::kEncoder : AppearanceSource::kProvided;
  cfg.nms_overlap = o.nms_overlap;
  cfg.fps = o.fps;
  cfg.epoch_base = o.epoch_base;
  cfg.node_id = o.node_id;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

std::vector<std::unique_ptr<AlertSink>> make_sinks(const Options& o) {
  std::vector<std::unique_ptr<AlertSink>> sinks;
  for (const auto& f : o.alert_files) sinks.push_back(make_sink("file:" + f));
  for (const auto& u : o.alert_udp) sinks.push_back(make_sink("udp:" + u));
  return sinks;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError("cannot write " + path);
  return out;
}

std::vector<EvalCase> scenario_cases(const Options& o) {
  if (o.scenario == "suite") return suite_cases(o.seed);
  if (o.scenario == "crowd") return {scenario_case("crowd", generate_scenario(crowd_workload(), o.seed))};
  for (const auto& s : standard_suite()) {
    if (s.name == o.scenario) return {scenario_case(s.name, generate_scenario(s.spec, o.seed))};
  }
  if (!std::filesystem::exists(o.scenario)) {
    throw CliError("unknown scenario '" + o.scenario + "' (not a built-in name or an existing file)");
  }
  const ScenarioSpec spec = parse_scenario_spec(read_file(o.scenario));
  return {scenario_case(std::filesystem::path(o.scenario).stem().string(), generate_scenario(spec, o.seed))};
}

void check_inputs(const Options& o, const PipelineConfig& cfg) {
  if (o.scenario.empty() == o.detections.empty()) {
    throw CliError("give exactly one of --detections or --scenario");
  }
  if (!o.detections.empty()) {
    if (o.detections != "-" && !std::filesystem::is_regular_file(o.detections)) {
      throw CliError("detection file not found: " + o.detections);
    }
    if (cfg.appearance == AppearanceSource::kEncoder) {
      throw CliError("--appearance encoder needs image patches, which only synthetic scenarios provide");
    }
    if (o.descriptors.empty()) throw CliError("--detections needs a --descriptors sidecar");
  }
}

// Reads a detection file into contiguous frames [first, last] with
// descriptors attached.
EvalCase file_case(const Options& o, std::int64_t first, std::int64_t last_at_least) {
  std::vector<FrameBatch> frames;
  if (o.detections == "-") {
    frames = parse_detections(std::cin);
  } else {
    std::ifstream in(o.detections);
    if (!in) throw CliError("cannot open " + o.detections);
    frames = parse_detections(in);
  }
  std::ifstream din(o.descriptors);
  if (!din) throw CliError("cannot open " + o.descriptors);
  attach_descriptors(frames, parse_descriptors(din));
  const std::int64_t last = std::max(last_at_least, frames.empty() ? first - 1 : frames.back().frame);
  if (first < 0) first = frames.empty() ? 0 : frames.front().frame;
  EvalCase c;
  c.name = std::filesystem::path(o.detections).stem().string();
  c.frames = fill_frame_gaps(std::move(frames), first, last);
  return c;
}

int cmd_run(const Options& o) {
  const PipelineConfig cfg = make_config(o);
  check_inputs(o, cfg);
  auto sinks = make_sinks(o);
  std::ofstream track_out = open_output(o.track_log);
  std::ofstream event_out = open_output(o.event_log);

  PatchSource patches;
  std::vector<FrameBatch> frames;
  std::unique_ptr<DetectionStream> stream;
  DescriptorTable table;
  if (!o.scenario.empty()) {
    auto cases = scenario_cases(o);
    if (cases.size() != 1) throw CliError("run takes a single scenario, not the whole suite");
    frames = std::move(cases.front().frames);
    patches = std::move(cases.front().patches);
  } else if (o.detections == "-") {
    std::ifstream din(o.descriptors);
    if (!din) throw CliError("cannot open " + o.descriptors);
    table = parse_descriptors(din);
    stream = std::make_unique<DetectionStream>(std::cin);
  } else {
    frames = file_case(o, -1, -1).frames;
  }

  Pipeline pipeline(cfg, std::move(sinks), patches);
  std::size_t processed = 0, alerts = 0, failures = 0;
  auto step = [&](const FrameBatch& batch) {
    FrameOutput out = pipeline.process(batch);
    write_track_log_rows(track_out, out.tracks);
    for (const auto& report : out.deliveries) {
      ++alerts;
      for (const auto& r : report.results) {
        if (r.ok) continue;
        ++failures;
        std::cerr << "alert delivery to " << r.sink << " failed: " << r.error << '\n';
      }
    }
    ++processed;
  };

  track_out << kTrackLogHeader;
  if (stream) {
    std::int64_t next_frame = -1;
    while (auto batch = stream->next()) {
      for (std::size_t i = 0; i < batch->detections.size(); ++i) {
        const auto it = table.find({batch->frame, i});
        if (it == table.end()) {
          throw IngestionError("no descriptor for detection " + std::to_string(i) + " of frame " +
                               std::to_string(batch->frame));
        }
        batch->detections[i].descriptor = it->second;
      }
      if (next_frame >= 0) {
        for (; next_frame < batch->frame; ++next_frame) step({next_frame, {}});
      }
      step(*batch);
      next_frame = batch->frame + 1;
    }
  } else {
    for (const auto& batch : frames) step(batch);
  }
  pipeline.finish();
  const auto events = pipeline.engine().events();
  write_event_log(event_out, events);
  std::cerr << "frames " << processed << ", events " << events.size() << ", alerts " << alerts
            << ", delivery failures " << failures << '\n';
  return 0;
}

std::vector<EvalCase> eval_cases(const Options& o, const PipelineConfig& cfg) {
  check_inputs(o, cfg);
  if (!o.scenario.empty()) {
    if (!o.labels.empty()) throw CliError("--labels applies to --detections input only");
    return scenario_cases(o);
  }
  if (o.labels.empty()) throw CliError("--detections input needs --labels");
  std::ifstream lin(o.labels);
  if (!lin) throw CliError("cannot open " + o.labels);
  const std::vector<bool> labels = parse_labels(lin);
  EvalCase c = file_case(o, 0, static_cast<std::int64_t>(labels.size()) - 1);
  if (c.frames.size() != labels.size()) {
    throw CliError("label count mismatch: " + std::to_string(labels.size()) +
                   " labels but detections run to frame " + std::to_string(c.frames.back().frame));
  }
  c.labels = labels;
  return {std::move(c)};
}

std::string format_auc(double auc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", auc);
  return buf;
}

int cmd_eval(const Options& o) {
  const PipelineConfig cfg = make_config(o);
  const auto cases = eval_cases(o, cfg);
  const SuiteScore score = evaluate_cases(cases, cfg);
  if (score.cases.size() > 1) {
    for (const auto& c : score.cases) std::cout << c.name << ' ' << format_auc(c.auc) << '\n';
  }
  std::cout << "AUC " << format_auc(score.pooled_auc) << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  const PipelineConfig cfg = make_config(o);
  const SweepConfig sweep = SweepConfig::parse(read_file(o.grid));
  sweep.validate(cfg);
  const auto cases = eval_cases(o, cfg);
  const auto rows = run_sweep(cases, cfg, sweep, std::max(1u, o.jobs));
  if (o.table.empty()) {
    write_sweep_table(std::cout, rows);
  } else {
    std::ofstream out = open_output(o.table);
    write_sweep_table(out, rows);
  }
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.auc; });
  if (failed > 0) std::cerr << failed << " of " << rows.size() << " grid points failed\n";
  return 0;
}

int cmd_bench(const Options& o) {
  if (o.predict) {
    const TimingPrediction p = predict_time(o.timing, o.dk);
    char buf[96];
    std::snprintf(buf, sizeof buf, "d_k: %lld\ntau_ms: %g\nfps: %.2f\n", static_cast<long long>(o.dk),
                  p.tau_ms, p.fps);
    std::cout << buf;
    return 0;
  }
  Options w = o;
  if (w.scenario.empty() && w.detections.empty()) w.scenario = "crowd";
  const PipelineConfig cfg = make_config(w);
  check_inputs(w, cfg);
  const auto cases = w.scenario.empty() ? std::vector<EvalCase>{file_case(w, -1, -1)} : scenario_cases(w);
  if (cases.size() != 1) throw CliError("bench takes a single workload, not the whole suite");
  const BenchReport report = bench(cases.front(), cfg);
  if (o.report.empty()) {
    write_bench_report(std::cout, report);
  } else {
    std::ofstream out = open_output(o.report);
    write_bench_report(out, report);
  }
  return 0;
}

int cmd_generate(const Options& o) {
  if (o.scenario.empty() || o.scenario == "suite") throw CliError("generate needs a single --scenario");
  const auto cases = scenario_cases(o);
  std::vector<FrameBatch> frames = cases.front().frames;
  std::ofstream det = open_output(o.out_detections);
  det << "# frame,id,x,y,w,h,confidence\n";
  write_detections(det, frames);
  std::ofstream desc = open_output(o.out_descriptors);
  write_descriptors(desc, frames);
  std::ofstream lab = open_output(o.out_labels);
  for (std::size_t f = 0; f < cases.front().labels.size(); ++f) {
    lab << f << ',' << (cases.front().labels[f] ? 1 : 0) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgewatch: multi-object tracking and trajectory anomaly detection"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Track a detection stream and report anomalies");
  add_input(run, o);
  add_tracking(run, o);
  add_alerts(run, o);
  option(run, "track-log", o.track_log, "Track log path");
  option(run, "event-log", o.event_log, "Event log path");

  auto* eval = app.add_subcommand("eval", "Frame-level AUC against labels");
  add_input(eval, o);
  add_tracking(eval, o);
  option(eval, "labels", o.labels, "Per-frame labels, one 0/1 per line")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "AUC over a parameter grid");
  add_input(sweep, o);
  add_tracking(sweep, o);
  option(sweep, "labels", o.labels, "Per-frame labels, one 0/1 per line")->check(CLI::ExistingFile);
  option(sweep, "grid", o.grid, "Grid JSON file")->required()->check(CLI::ExistingFile);
  option(sweep, "table", o.table, "Result table path (default stdout)");
  option(sweep, "jobs", o.jobs, "Grid points evaluated in parallel");

  auto* bench_cmd = app.add_subcommand("bench", "Per-stage latency, or the analytic timing model");
  add_input(bench_cmd, o);
  add_tracking(bench_cmd, o);
  flag(bench_cmd, "predict", o.predict, "Print the analytic per-frame time instead of measuring");
  option(bench_cmd, "dk", o.dk, "Detections per frame for --predict");
  option(bench_cmd, "od-ms", o.timing.od_ms, "Object detection cost per frame, ms");
  option(bench_cmd, "fe-ms", o.timing.fe_ms, "Feature encoding cost per detection, ms");
  option(bench_cmd, "ta-ms", o.timing.ta_ms, "Trajectory association cost per frame, ms");
  option(bench_cmd, "report", o.report, "Report path (default stdout)");

  auto* gen = app.add_subcommand("generate", "Write a synthetic scenario as detection, descriptor and label files");
  option(gen, "scenario", o.scenario, "Built-in scenario name or JSON spec");
  option(gen, "seed", o.seed, "Seed");
  option(gen, "out-detections", o.out_detections, "Detection CSV path");
  option(gen, "out-descriptors", o.out_descriptors, "Descriptor CSV path");
  option(gen, "out-labels", o.out_labels, "Label CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(o);
    if (*eval) return cmd_eval(o);
    if (*sweep) return cmd_sweep(o);
    if (*bench_cmd) return cmd_bench(o);
    if (*gen) return cmd_generate(o);
  } catch (const std::exception& e) {
    std::cerr << "edgewatch: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
