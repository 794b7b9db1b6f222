#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edgewatch/anomaly.hpp"
#include "edgewatch/ingestion.hpp"

namespace edgewatch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class ActorKind { kWalk, kLoiter, kRun, kCircle, kJump, kConvergeGroup, kDivergeGroup };

/// One parametric trajectory script. Frames are absolute; `exit` is exclusive
/// and defaults to the scenario duration. Fields a kind does not use are
/// ignored.
struct ActorScript {
  ActorKind kind = ActorKind::kWalk;
  std::int64_t enter = 0;
  std::int64_t exit = -1;
  double noise = 0.5;             // px, per-axis position noise
  double descriptor_noise = 0.02; // per-component uniform perturbation
  double box_w = 30.0;
  double box_h = 80.0;

  Vec2 start;      // walk, loiter, run, jump
  Vec2 velocity;   // walk, loiter, run, jump (px/frame)

  std::int64_t stop_at = 0;   // loiter: frames after enter
  std::int64_t stop_for = 0;  // loiter: stationary frames

  Vec2 center;          // circle, groups
  double radius = 40.0; // circle
  double period = 100;  // circle: frames per loop, negative turns clockwise
  double phase = 0.0;   // circle: radians

  std::int64_t jump_at = 0;     // jump: absolute frame of take-off
  double jump_height = 40.0;    // jump: px, upwards
  std::int64_t jump_frames = 10;
  double label_frac = 0.2;      // jump: labelled while lifted >= label_frac * height

  int count = 4;                // groups
  double start_radius = 200.0;  // groups: distance from center at enter
  double end_radius = 45.0;     // groups: distance at exit
  double speed = 2.0;           // groups: px/frame
  double label_radius = 80.0;   // groups
  std::int64_t label_lead = 30; // groups
};

struct ScenarioSpec {
  std::int64_t duration = 0;
  double width = 640.0;
  double height = 480.0;
  std::vector<ActorScript> actors;
};

/// Clothing colours of a rendered body; pixel noise is derived from `seed`.
struct Appearance {
  std::array<std::uint8_t, 3> upper{};
  std::array<std::uint8_t, 3> lower{};
  std::uint64_t seed = 0;
};

struct Scenario {
  std::vector<FrameBatch> frames;  // one batch per frame 0 .. duration-1
  /// Parallel to frames[f].detections.
  std::vector<std::vector<Appearance>> appearance;
  std::vector<bool> labels;        // any anomaly active
  /// Bit n set when anomaly class n is active.
  std::vector<std::uint8_t> class_labels;
};

/// Reads a JSON scenario spec:
///   {"duration": 400, "width": 640, "height": 480,
///    "actors": [{"kind": "walk", "start": [20, 60], "velocity": [2, 0]}, ...]}
/// Actor keys mirror ActorScript field names; vectors are [x, y] arrays.
ScenarioSpec parse_scenario_spec(const std::string& json_text);

/// Renders the actors into detections with synthetic descriptors and
/// ground-truth labels. Deterministic for a given seed. Throws IngestionError
/// if an actor leaves the scene bounds while visible.
Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed);

struct NamedScenario {
  std::string name;
  AnomalyCode code;
  ScenarioSpec spec;
};

/// Renders detection `index` of frame `frame` as an RGB patch the size of
/// its box: upper colour over the top half, lower colour below, with +-12
/// levels of per-pixel noise.
ImagePatch render_patch(const Scenario& scenario, std::int64_t frame, std::size_t index);

/// One scenario per anomaly class, each with three normal walkers.
std::vector<NamedScenario> standard_suite();

/// Ten concurrently visible actors over `duration` frames, the throughput
/// workload.
ScenarioSpec crowd_workload(std::int64_t duration = 1000);

}  // namespace edgewatch
