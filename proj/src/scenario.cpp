#include "edgewatch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "json.hpp"

namespace edgewatch {

namespace {

using nlohmann::json;

Vec2 read_vec(const json& j, const char* key, Vec2 fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw IngestionError(std::string("scenario field '") + key + "' must be [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

template <typename T>
T read(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

ActorKind parse_kind(const std::string& s) {
  if (s == "walk") return ActorKind::kWalk;
  if (s == "loiter") return ActorKind::kLoiter;
  if (s == "run") return ActorKind::kRun;
  if (s == "circle") return ActorKind::kCircle;
  if (s == "jump") return ActorKind::kJump;
  if (s == "converge_group" || s == "converge-group") return ActorKind::kConvergeGroup;
  if (s == "diverge_group" || s == "diverge-group") return ActorKind::kDivergeGroup;
  throw IngestionError("unknown actor kind '" + s + "'");
}

std::uint8_t bit(AnomalyCode c) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c)); }

// Rendered trajectory of one visible body.
struct Member {
  std::int64_t first = 0;
  std::vector<Vec2> positions;
  std::vector<std::uint8_t> labels;
  const ActorScript* script = nullptr;
};

std::vector<Member> render(const ActorScript& a, std::int64_t duration) {
  const std::int64_t enter = std::max<std::int64_t>(a.enter, 0);
  std::int64_t exit = a.exit < 0 ? duration : std::min(a.exit, duration);
  std::vector<Member> out;

  auto linear = [&](std::int64_t t) {
    return Vec2{a.start.x + a.velocity.x * static_cast<double>(t),
                a.start.y + a.velocity.y * static_cast<double>(t)};
  };

  switch (a.kind) {
    case ActorKind::kWalk:
    case ActorKind::kRun:
    case ActorKind::kLoiter:
    case ActorKind::kCircle:
    case ActorKind::kJump: {
      Member m{enter, {}, {}, &a};
      for (std::int64_t f = enter; f < exit; ++f) {
        const std::int64_t t = f - a.enter;
        Vec2 p;
        std::uint8_t label = 0;
        switch (a.kind) {
          case ActorKind::kWalk:
            p = linear(t);
            break;
          case ActorKind::kRun:
            p = linear(t);
            label = bit(AnomalyCode::kFast);
            break;
          case ActorKind::kLoiter:
            if (t < a.stop_at) {
              p = linear(t);
            } else if (t < a.stop_at + a.stop_for) {
              p = linear(a.stop_at);
              label = bit(AnomalyCode::kLoiter);
            } else {
              p = linear(t - a.stop_for);
            }
            break;
          case ActorKind::kCircle: {
            const double theta =
                a.phase + 2.0 * std::numbers::pi * static_cast<double>(t) / a.period;
            p = {a.center.x + a.radius * std::cos(theta), a.center.y + a.radius * std::sin(theta)};
            label = bit(AnomalyCode::kCircular);
            break;
          }
          case ActorKind::kJump: {
            p = linear(t);
            const std::int64_t k = f - a.jump_at;
            if (k >= 0 && k <= a.jump_frames) {
              const double lift =
                  a.jump_height * 0.5 *
                  (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(a.jump_frames)));
              p.y -= lift;
              if (lift >= a.label_frac * a.jump_height) label = bit(AnomalyCode::kJump);
            }
            break;
          }
          default:
            break;
        }
        m.positions.push_back(p);
        m.labels.push_back(label);
      }
      out.push_back(std::move(m));
      break;
    }
    case ActorKind::kConvergeGroup:
    case ActorKind::kDivergeGroup: {
      const bool converge = a.kind == ActorKind::kConvergeGroup;
      const double travel = std::abs(a.end_radius - a.start_radius);
      const auto steps = static_cast<std::int64_t>(std::floor(travel / a.speed));
      exit = std::min(exit, a.enter + steps + 1);
      const double dir = a.end_radius >= a.start_radius ? 1.0 : -1.0;
      const std::uint8_t label_bit = bit(converge ? AnomalyCode::kGather : AnomalyCode::kDisperse);

      std::vector<double> radius;
      for (std::int64_t f = enter; f < exit; ++f) {
        radius.push_back(a.start_radius + dir * a.speed * static_cast<double>(f - a.enter));
      }
      std::vector<std::uint8_t> labels(radius.size(), 0);
      if (!radius.empty()) {
        if (converge) {
          auto it = std::find_if(radius.begin(), radius.end(),
                                 [&](double r) { return r <= a.label_radius; });
          if (it != radius.end()) {
            const auto from = std::max<std::int64_t>(0, (it - radius.begin()) - a.label_lead);
            std::fill(labels.begin() + from, labels.end(), label_bit);
          }
        } else {
          std::int64_t last = -1;
          for (std::size_t i = 0; i < radius.size(); ++i) {
            if (radius[i] <= a.label_radius) last = static_cast<std::int64_t>(i);
          }
          if (last >= 0) {
            const auto to = std::min<std::int64_t>(static_cast<std::int64_t>(labels.size()),
                                                   last + a.label_lead + 1);
            std::fill(labels.begin(), labels.begin() + to, label_bit);
          }
        }
      }
      for (int i = 0; i < a.count; ++i) {
        const double angle = std::numbers::pi / 4.0 + 2.0 * std::numbers::pi * i / a.count;
        Member m{enter, {}, labels, &a};
        for (double r : radius) {
          m.positions.push_back({a.center.x + r * std::cos(angle), a.center.y + r * std::sin(angle)});
        }
        out.push_back(std::move(m));
      }
      break;
    }
  }
  return out;
}

}  // namespace

ScenarioSpec parse_scenario_spec(const std::string& json_text) {
  ScenarioSpec spec;
  try {
    const json j = json::parse(json_text);
    spec.duration = j.at("duration").get<std::int64_t>();
    spec.width = read(j, "width", spec.width);
    spec.height = read(j, "height", spec.height);
    for (const auto& ja : j.at("actors")) {
      ActorScript a;
      a.kind = parse_kind(ja.at("kind").get<std::string>());
      a.enter = read(ja, "enter", a.enter);
      a.exit = read(ja, "exit", a.exit);
      a.noise = read(ja, "noise", a.noise);
      a.descriptor_noise = read(ja, "descriptor_noise", a.descriptor_noise);
      a.box_w = read(ja, "box_w", a.box_w);
      a.box_h = read(ja, "box_h", a.box_h);
      a.start = read_vec(ja, "start", a.start);
      a.velocity = read_vec(ja, "velocity", a.velocity);
      a.stop_at = read(ja, "stop_at", a.stop_at);
      a.stop_for = read(ja, "stop_for", a.stop_for);
      a.center = read_vec(ja, "center", a.center);
      a.radius = read(ja, "radius", a.radius);
      a.period = read(ja, "period", a.period);
      a.phase = read(ja, "phase", a.phase);
      a.jump_at = read(ja, "jump_at", a.jump_at);
      a.jump_height = read(ja, "jump_height", a.jump_height);
      a.jump_frames = read(ja, "jump_frames", a.jump_frames);
      a.label_frac = read(ja, "label_frac", a.label_frac);
      a.count = read(ja, "count", a.count);
      a.start_radius = read(ja, "start_radius", a.start_radius);
      a.end_radius = read(ja, "end_radius", a.end_radius);
      a.speed = read(ja, "speed", a.speed);
      a.label_radius = read(ja, "label_radius", a.label_radius);
      a.label_lead = read(ja, "label_lead", a.label_lead);
      spec.actors.push_back(a);
    }
  } catch (const json::exception& e) {
    throw IngestionError(std::string("invalid scenario spec: ") + e.what());
  }
  return spec;
}

Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  if (spec.duration < 0) throw IngestionError("scenario duration must be non-negative");
  if (!(spec.width > 0 && spec.height > 0)) throw IngestionError("scene size must be positive");

  std::vector<Member> members;
  for (const auto& a : spec.actors) {
    if (!(a.box_w > 0 && a.box_h > 0) || a.noise < 0 || a.descriptor_noise < 0) {
      throw IngestionError("actor box size must be positive and noise non-negative");
    }
    if (a.kind == ActorKind::kCircle && a.period == 0) {
      throw IngestionError("circle period must be non-zero");
    }
    if ((a.kind == ActorKind::kConvergeGroup || a.kind == ActorKind::kDivergeGroup) &&
        (a.count < 1 || !(a.speed > 0))) {
      throw IngestionError("group actors need count >= 1 and positive speed");
    }
    if (a.kind == ActorKind::kJump && a.jump_frames < 1) {
      throw IngestionError("jump_frames must be positive");
    }
    for (auto& m : render(a, spec.duration)) members.push_back(std::move(m));
  }

  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t k = 0; k < members[i].positions.size(); ++k) {
      const Vec2& p = members[i].positions[k];
      if (p.x < 0 || p.x > spec.width || p.y < 0 || p.y > spec.height) {
        throw IngestionError("actor " + std::to_string(i) + " leaves the scene at frame " +
                             std::to_string(members[i].first + static_cast<std::int64_t>(k)));
      }
    }
  }

  const auto n = static_cast<std::size_t>(spec.duration);
  Scenario out;
  out.frames.resize(n);
  out.labels.assign(n, false);
  out.class_labels.assign(n, 0);
  out.appearance.resize(n);
  for (std::size_t f = 0; f < n; ++f) out.frames[f].frame = static_cast<std::int64_t>(f);

  for (std::size_t i = 0; i < members.size(); ++i) {
    const Member& m = members[i];
    const ActorScript& a = *m.script;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> conf(0.85, 0.95);

    std::array<double, kDescriptorDim> base{};
    for (auto& v : base) v = gauss(rng);
    const Descriptor identity = Descriptor::normalized(base);
    std::uniform_int_distribution<int> channel(0, 255);
    Appearance look;
    for (auto& c : look.upper) c = static_cast<std::uint8_t>(channel(rng));
    for (auto& c : look.lower) c = static_cast<std::uint8_t>(channel(rng));

    for (std::size_t k = 0; k < m.positions.size(); ++k) {
      const auto f = static_cast<std::size_t>(m.first) + k;
      std::array<double, kDescriptorDim> values{};
      for (std::size_t d = 0; d < kDescriptorDim; ++d) {
        values[d] = identity[d] + a.descriptor_noise * unit(rng);
      }
      Detection det;
      det.frame = static_cast<std::int64_t>(f);
      const double u = m.positions[k].x + a.noise * gauss(rng);
      const double v = m.positions[k].y + a.noise * gauss(rng);
      det.box = {u - a.box_w / 2.0, v - a.box_h / 2.0, a.box_w, a.box_h};
      det.confidence = conf(rng);
      det.descriptor = Descriptor::normalized(values);
      out.frames[f].detections.push_back(std::move(det));
      look.seed = rng();
      out.appearance[f].push_back(look);
      out.class_labels[f] |= m.labels[k];
    }
  }
  for (std::size_t f = 0; f < n; ++f) out.labels[f] = out.class_labels[f] != 0;
  return out;
}

ImagePatch render_patch(const Scenario& scenario, std::int64_t frame, std::size_t index) {
  if (frame < 0 || static_cast<std::size_t>(frame) >= scenario.frames.size() ||
      index >= scenario.frames[static_cast<std::size_t>(frame)].detections.size()) {
    throw IngestionError("no detection " + std::to_string(index) + " in frame " +
                         std::to_string(frame));
  }
  const auto f = static_cast<std::size_t>(frame);
  const Detection& d = scenario.frames[f].detections[index];
  const Appearance& look = scenario.appearance[f][index];
  ImagePatch patch;
  patch.width = std::max(1, static_cast<int>(std::lround(d.box.w)));
  patch.height = std::max(1, static_cast<int>(std::lround(d.box.h)));
  patch.rgb.resize(static_cast<std::size_t>(patch.width * patch.height * 3));
  std::mt19937 rng(static_cast<std::uint32_t>(look.seed ^ (look.seed >> 32)));
  std::uniform_int_distribution<int> jitter(-12, 12);
  for (int y = 0; y < patch.height; ++y) {
    const auto& colour = 2 * y < patch.height ? look.upper : look.lower;
    for (int x = 0; x < patch.width; ++x) {
      const auto i = static_cast<std::size_t>((y * patch.width + x) * 3);
      for (int c = 0; c < 3; ++c) {
        patch.rgb[i + c] = static_cast<std::uint8_t>(std::clamp(colour[c] + jitter(rng), 0, 255));
      }
    }
  }
  return patch;
}

namespace {

std::vector<ActorScript> normal_walkers() {
  ActorScript a;
  a.kind = ActorKind::kWalk;
  a.start = {20, 60};
  a.velocity = {2.0, 0.0};
  a.exit = 300;

  ActorScript b;
  b.kind = ActorKind::kWalk;
  b.start = {620, 420};
  b.velocity = {-1.6, 0.0};
  b.exit = 370;

  ActorScript c;
  c.kind = ActorKind::kWalk;
  c.start = {600, 50};
  c.velocity = {0.0, 1.2};
  c.exit = 316;
  return {a, b, c};
}

ScenarioSpec with_walkers(ActorScript anomaly) {
  ScenarioSpec s;
  s.duration = 400;
  s.actors = normal_walkers();
  s.actors.push_back(anomaly);
  return s;
}

}  // namespace

std::vector<NamedScenario> standard_suite() {
  std::vector<NamedScenario> suite;

  ActorScript loiter;
  loiter.kind = ActorKind::kLoiter;
  loiter.start = {100, 240};
  loiter.velocity = {2.0, 0.0};
  loiter.stop_at = 40;
  loiter.stop_for = 200;
  loiter.exit = 380;
  suite.push_back({"loiter", AnomalyCode::kLoiter, with_walkers(loiter)});

  ActorScript run;
  run.kind = ActorKind::kRun;
  run.start = {20, 240};
  run.velocity = {7.5, 0.0};
  run.enter = 100;
  run.exit = 180;
  suite.push_back({"fast", AnomalyCode::kFast, with_walkers(run)});

  ActorScript circle;
  circle.kind = ActorKind::kCircle;
  circle.center = {320, 240};
  circle.radius = 40;
  circle.period = 100;
  circle.enter = 60;
  circle.exit = 360;
  suite.push_back({"circular", AnomalyCode::kCircular, with_walkers(circle)});

  ActorScript jump;
  jump.kind = ActorKind::kJump;
  jump.start = {40, 260};
  jump.velocity = {2.0, 0.0};
  jump.jump_at = 150;
  jump.jump_height = 40;
  jump.jump_frames = 10;
  jump.exit = 300;
  suite.push_back({"jump", AnomalyCode::kJump, with_walkers(jump)});

  ActorScript gather;
  gather.kind = ActorKind::kConvergeGroup;
  gather.center = {320, 240};
  gather.count = 4;
  gather.start_radius = 200;
  gather.end_radius = 45;
  gather.speed = 2.0;
  gather.enter = 100;
  suite.push_back({"gather", AnomalyCode::kGather, with_walkers(gather)});

  ActorScript disperse = gather;
  disperse.kind = ActorKind::kDivergeGroup;
  disperse.start_radius = 45;
  disperse.end_radius = 200;
  suite.push_back({"disperse", AnomalyCode::kDisperse, with_walkers(disperse)});

  return suite;
}

ScenarioSpec crowd_workload(std::int64_t duration) {
  ScenarioSpec s;
  s.duration = duration;
  const double speed = 500.0 / static_cast<double>(std::max<std::int64_t>(duration, 1));
  for (int i = 0; i < 3; ++i) {
    ActorScript a;
    a.kind = ActorKind::kWalk;
    a.start = {40, 60.0 + 50.0 * i};
    a.velocity = {speed, 0.0};
    s.actors.push_back(a);
    ActorScript b = a;
    b.start = {600, 300.0 + 50.0 * i};
    b.velocity = {-speed, 0.0};
    s.actors.push_back(b);
  }
  ActorScript loiter;
  loiter.kind = ActorKind::kLoiter;
  loiter.start = {200, 250};
  loiter.velocity = {speed, 0.0};
  loiter.stop_at = duration / 4;
  loiter.stop_for = duration / 4;
  s.actors.push_back(loiter);
  ActorScript circle;
  circle.kind = ActorKind::kCircle;
  circle.center = {450, 240};
  circle.radius = 40;
  s.actors.push_back(circle);
  ActorScript jump;
  jump.kind = ActorKind::kJump;
  jump.start = {80, 420};
  jump.velocity = {speed, 0.0};
  jump.jump_at = duration / 2;
  s.actors.push_back(jump);
  ActorScript run;
  run.kind = ActorKind::kWalk;
  run.start = {320, 40};
  run.velocity = {0.0, 380.0 / static_cast<double>(std::max<std::int64_t>(duration, 1))};
  s.actors.push_back(run);
  return s;
}

}  // namespace edgewatch
