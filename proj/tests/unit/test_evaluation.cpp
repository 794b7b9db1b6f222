#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "edgewatch/evaluation.hpp"
#include "oracles.hpp"

using namespace edgewatch;

namespace {

EvalRecord random_record(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(2, 20), level(0, 5);
  EvalRecord r;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    r.scores.push_back(level(rng) / 5.0);
    r.labels.push_back(i % 2 == 0 ? level(rng) > 2 : level(rng) > 3);
  }
  r.labels[0] = true;
  r.labels[1] = false;
  return r;
}

std::vector<EvalCase> two_cases() {
  auto all = suite_cases(1);
  return {all[0], all[2]};
}

}  // namespace

TEST_CASE("AUC examples") {
  CHECK(frame_auc({{0.1, 0.4, 0.35, 0.8}, {false, false, true, true}}) == 0.75);
  CHECK(frame_auc({{0.0, 0.1, 0.9, 1.0}, {false, false, true, true}}) == 1.0);
  CHECK(frame_auc({{0.3, 0.3, 0.3}, {true, false, true}}) == 0.5);
  CHECK(frame_auc({{0.9, 0.1}, {false, true}}) == 0.0);
}

TEST_CASE("AUC rejects degenerate records") {
  CHECK_THROWS_AS(frame_auc({{0.1, 0.2}, {true}}), EvaluationError);
  CHECK_THROWS_AS(frame_auc({{0.1, 0.2}, {true, true}}), EvaluationError);
  CHECK_THROWS_AS(frame_auc({{}, {}}), EvaluationError);
}

TEST_CASE("AUC equals the pair-count oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const EvalRecord r = random_record(rng);
    CHECK(frame_auc(r) == oracle::pair_count_auc(r.scores, r.labels));
  }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    EvalRecord r = random_record(rng);
    const double before = frame_auc(r);
    for (auto& s : r.scores) s = std::exp(3.0 * s) - 7.0;
    CHECK(frame_auc(r) == before);
  }
}

TEST_CASE("timing model reproduces the reported rates") {
  const TimingModel m;
  CHECK(predict_time(m, 0).tau_ms == 96.0);
  CHECK(predict_time(m, 8).tau_ms == 400.0);
  CHECK(predict_time(m, 8).fps == 2.5);
  CHECK(predict_time(m, 5).tau_ms == 286.0);
  CHECK(predict_time(m, 5).fps == doctest::Approx(3.5).epsilon(0.01));
  CHECK(predict_time(m, 2).tau_ms == 172.0);
  CHECK(predict_time(m, 2).fps == doctest::Approx(5.8).epsilon(0.01));
  CHECK_THROWS(predict_time(m, -1));
  CHECK_THROWS(predict_time({-1, 1, 1}, 1));
}

TEST_CASE("timing model is linear in the detection count") {
  const TimingModel m{80, 25, 6};
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      CHECK(predict_time(m, a).tau_ms + predict_time(m, b).tau_ms - predict_time(m, 0).tau_ms ==
            predict_time(m, a + b).tau_ms);
}

TEST_CASE("suite cases cover every class with mixed labels") {
  const auto cases = suite_cases(1);
  REQUIRE(cases.size() == 6);
  std::set<std::string> names;
  for (const auto& c : cases) {
    names.insert(c.name);
    CHECK(c.labels.size() == c.frames.size());
    CHECK(std::count(c.labels.begin(), c.labels.end(), true) > 0);
    CHECK(std::count(c.labels.begin(), c.labels.end(), false) > 0);
    CHECK(case_scores(c, PipelineConfig{}).size() == c.labels.size());
  }
  CHECK(names.size() == 6);
}

TEST_CASE("pooled AUC uses every frame") {
  const auto cases = two_cases();
  const PipelineConfig cfg;
  const SuiteScore s = evaluate_cases(cases, cfg);
  REQUIRE(s.cases.size() == 2);
  EvalRecord pooled;
  for (const auto& c : cases) {
    const auto sc = case_scores(c, cfg);
    pooled.scores.insert(pooled.scores.end(), sc.begin(), sc.end());
    pooled.labels.insert(pooled.labels.end(), c.labels.begin(), c.labels.end());
    CHECK(frame_auc({sc, c.labels}) == s.cases[&c - cases.data()].auc);
  }
  CHECK(s.pooled_auc == frame_auc(pooled));
}

TEST_CASE("sweep of one point gives one row") {
  const auto cases = two_cases();
  const SweepConfig sweep = SweepConfig::parse(R"({"max_cos_distance": [0.9]})");
  const auto rows = run_sweep(cases, PipelineConfig{}, sweep);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].auc);
  CHECK(*rows[0].auc == evaluate_cases(cases, PipelineConfig{}).pooled_auc);
  std::ostringstream out;
  write_sweep_table(out, rows);
  CHECK(out.str().rfind("encoder,max_cos_distance,nms_overlap,auc,status\n", 0) == 0);
}

TEST_CASE("sweep grids form a cartesian product in a deterministic order") {
  const auto cases = two_cases();
  const SweepConfig sweep = SweepConfig::parse(
      R"({"encoder_size": ["64x32", "128x64"], "max_cos_distance": [0.9, 0.6], "nms_overlap": [0.3, 0.5]})");
  const auto rows = run_sweep(cases, PipelineConfig{}, sweep, 4);
  REQUIRE(rows.size() == 8);
  std::set<std::tuple<int, double, double>> tuples;
  for (const auto& r : rows) {
    tuples.insert({r.encoder.input_height, r.max_cos_distance, r.nms_overlap});
    CHECK(r.auc);
  }
  CHECK(tuples.size() == 8);
  CHECK(rows.front().max_cos_distance == 0.6);

  std::ostringstream a, b;
  write_sweep_table(a, rows);
  write_sweep_table(b, run_sweep(cases, PipelineConfig{}, sweep, 1));
  CHECK(a.str() == b.str());
}

TEST_CASE("sweep association axes add table columns") {
  const auto cases = two_cases();
  const SweepConfig sweep = SweepConfig::parse(R"({"lambda": [0, 0.2], "n_init": [3]})");
  const auto rows = run_sweep(cases, PipelineConfig{}, sweep, 2);
  REQUIRE(rows.size() == 2);
  std::ostringstream out;
  write_sweep_table(out, rows);
  CHECK(out.str().rfind("encoder,max_cos_distance,nms_overlap,lambda,n_init,auc,status\n", 0) == 0);
}

TEST_CASE("failing grid points become marked rows") {
  auto cases = two_cases();
  std::fill(cases[0].labels.begin(), cases[0].labels.end(), false);
  std::fill(cases[1].labels.begin(), cases[1].labels.end(), false);
  const auto rows = run_sweep(cases, PipelineConfig{}, SweepConfig::parse(R"({"nms_overlap": [0.3, 0.4]})"));
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK_FALSE(r.auc);
    CHECK_FALSE(r.error.empty());
  }
  std::ostringstream out;
  write_sweep_table(out, rows);
  CHECK(out.str().find(",,error: ") != std::string::npos);
}

TEST_CASE("grid parsing fails fast") {
  CHECK_THROWS_AS(SweepConfig::parse("{"), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse("{}"), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse("[1]"), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse(R"({"max_cos_distance": []})"), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse(R"({"max_cos_distance": ["a"]})"), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse(R"({"warp": [1]})"), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse(R"({"encoder_size": ["64by32"]})"), EvaluationError);
  const SweepConfig bad = SweepConfig::parse(R"({"lambda": [2.0]})");
  CHECK_THROWS_AS(bad.validate(PipelineConfig{}), EvaluationError);
  CHECK_THROWS_AS(SweepConfig::parse(R"({"i_max": [2.5]})").validate(PipelineConfig{}), EvaluationError);
}

TEST_CASE("bench accounting") {
  EvalCase empty;
  empty.name = "empty";
  const BenchReport e = bench(empty, PipelineConfig{});
  CHECK(e.frames == 0);
  CHECK(e.detections == 0);
  std::ostringstream out;
  write_bench_report(out, e);
  CHECK(out.str().find("frames: 0") != std::string::npos);

  const EvalCase crowd = scenario_case("crowd", generate_scenario(crowd_workload(1000), 1));
  const BenchReport r = bench(crowd, PipelineConfig{});
  CHECK(r.frames == 1000);
  CHECK(r.detections > 0);
  CHECK(r.associate_anomaly.mean_ms >= 0.0);
  CHECK(r.fps > 0.0);
}

TEST_CASE("timing summary uses nearest-rank p95") {
  std::vector<StageTimes> t(20);
  for (std::size_t i = 0; i < t.size(); ++i) t[i].associate_ms = static_cast<double>(i + 1);
  const BenchReport r = summarize_timings(t, 40);
  CHECK(r.frames == 20);
  CHECK(r.associate.mean_ms == doctest::Approx(10.5));
  CHECK(r.associate.p95_ms == 19.0);
  CHECK(r.associate_anomaly.p95_ms == 19.0);
}

TEST_CASE("suite sweep over the appearance gate keeps AUC above 0.9") {
  const auto cases = suite_cases(1);
  const auto rows = run_sweep(cases, PipelineConfig{}, SweepConfig::parse(R"({"max_cos_distance": [0.6, 0.9]})"), 2);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    REQUIRE(r.auc);
    CHECK(*r.auc >= 0.9);
  }
}
