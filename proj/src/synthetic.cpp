#include "advgen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "advgen/json_canonical.hpp"
#include "advgen/rng.hpp"
#include "advgen/scene_io.hpp"

namespace advgen {

namespace {

using nlohmann::json;

constexpr int kFrames = 90;
constexpr double kDt = 0.1;

json meta_json() {
  return json{{"dt", kDt}, {"t_obs", 10}, {"t_pred", 80}};
}

json lane_json(int id, Vec2 from, Vec2 to, double width, std::vector<int> successors = {},
               int left = -1, int right = -1) {
  json centerline = json::array();
  const double len = distance(from, to);
  const int steps = std::max(2, static_cast<int>(len / 10.0) + 1);
  for (int i = 0; i <= steps; ++i) {
    const double u = static_cast<double>(i) / steps;
    centerline.push_back(json::array({from.x + (to.x - from.x) * u, from.y + (to.y - from.y) * u}));
  }
  return json{{"id", id},          {"centerline", std::move(centerline)},
              {"width", width},    {"successors", successors},
              {"left", left},      {"right", right}};
}

json rect_polygon(double x0, double y0, double x1, double y1) {
  return json::array({json::array({x0, y0}), json::array({x1, y0}), json::array({x1, y1}),
                      json::array({x0, y1})});
}

// Straight constant-acceleration track; speed clamps at zero. Headings are
// clamped just inside (-pi, pi] so the 6-decimal canonical form re-parses to
// the same wrapped value.
json track_json(int id, double length, double width, const char* category, Vec2 start,
                double heading, double v, double a) {
  heading = std::clamp(wrap_angle(heading), -3.141592, 3.141592);
  json frames = json::array();
  Vec2 p = start;
  double speed = v;
  for (int k = 0; k < kFrames; ++k) {
    frames.push_back(json::array({p.x, p.y, speed, a, heading, 1}));
    const double v_next = std::max(0.0, speed + a * kDt);
    const double v_avg = 0.5 * (speed + v_next);
    p += heading_dir(heading) * (v_avg * kDt);
    speed = v_next;
  }
  return json{{"id", id},         {"length", length}, {"width", width},
              {"category", category}, {"frames", std::move(frames)}};
}

json following_scene(uint64_t seed, bool cut_in_variant, bool recoverable) {
  SplitMix64 rng(seed);
  const double v_ego = recoverable ? rng.uniform(10.5, 12.5) : rng.uniform(8.0, 12.0);
  const double gap = recoverable ? rng.uniform(26.0, 34.0) : rng.uniform(16.0, 26.0);
  const double v_lead = std::max(3.0, v_ego - (recoverable ? rng.uniform(2.5, 3.5)
                                                           : rng.uniform(0.5, 2.5)));
  const double a_lead = -rng.uniform(0.3, 0.8);
  const double side_y = rng.next() % 2 == 0 ? 3.5 : -3.5;

  json lanes = json::array();
  lanes.push_back(lane_json(1, {-80.0, 3.5}, {320.0, 3.5}, 3.5, {}, -1, 2));
  lanes.push_back(lane_json(2, {-80.0, 0.0}, {320.0, 0.0}, 3.5, {}, 1, 3));
  lanes.push_back(lane_json(3, {-80.0, -3.5}, {320.0, -3.5}, 3.5, {}, 2, -1));
  json map{{"lanes", std::move(lanes)},
           {"drivable", json::array({rect_polygon(-80.0, -5.5, 320.0, 5.5)})},
           {"stop_lines", json::array()},
           {"signals", json::array()}};

  json others = json::array();
  // lead vehicle in the ego lane, gently decelerating
  others.push_back(track_json(1, 4.6, 2.0, "car", {gap, 0.0}, 0.0, v_lead, a_lead));
  if (cut_in_variant) {
    // faster vehicle slightly behind in a neighbor lane
    others.push_back(track_json(2, 4.4, 1.9, "car", {rng.uniform(-12.0, -4.0), side_y}, 0.0,
                                v_ego + rng.uniform(2.0, 4.0), 0.0));
    // distant lead so the neighbor has a reason to cut in
    others.push_back(track_json(3, 4.8, 2.1, "car", {rng.uniform(55.0, 70.0), side_y}, 0.0,
                                v_ego - 2.0, 0.0));
  } else {
    // neighbor rolling alongside
    others.push_back(track_json(2, 4.4, 1.9, "car", {rng.uniform(-6.0, 8.0), side_y}, 0.0,
                                v_ego + rng.uniform(-1.0, 1.0), 0.0));
    // rear vehicle in the ego lane
    others.push_back(track_json(3, 4.8, 2.1, "car", {-rng.uniform(14.0, 24.0), 0.0}, 0.0,
                                v_ego + rng.uniform(0.5, 1.5), 0.0));
  }

  return json{{"meta", meta_json()},
              {"map", std::move(map)},
              {"tracks", json{{"ego", track_json(0, 4.5, 2.0, "car", {0.0, 0.0}, 0.0, v_ego, 0.0)},
                              {"others", std::move(others)}}}};
}

json cross_polygon() {
  return json::array({json::array({-220.0, -5.5}), json::array({-5.5, -5.5}),
                      json::array({-5.5, -220.0}), json::array({5.5, -220.0}),
                      json::array({5.5, -5.5}), json::array({220.0, -5.5}),
                      json::array({220.0, 5.5}), json::array({5.5, 5.5}),
                      json::array({5.5, 220.0}), json::array({-5.5, 220.0}),
                      json::array({-5.5, 5.5}), json::array({-220.0, 5.5})});
}

json crossing_scene(uint64_t seed, bool signalized, bool recoverable) {
  SplitMix64 rng(seed);
  const double v_ego = recoverable ? rng.uniform(8.5, 10.0) : rng.uniform(8.5, 11.0);
  // a logged ego that keeps accelerating separates replay timing from what a
  // reactive controller (which holds the decision-frame speed) will do
  const double a_ego = recoverable ? 1.5 : 0.0;
  const double v_cross = rng.uniform(7.0, 9.5);
  const double t_target = rng.uniform(3.2, 3.8);  // replay-ego arrival at the conflict
  double ego_start_x = 1.75;
  {
    // walk the logged motion backwards over observation + t_target
    const double total = 0.9 + t_target;
    ego_start_x = 1.75 - (v_ego * total + 0.5 * a_ego * total * total);
  }
  const double t_ego_cross = t_target + 0.9;  // from scenario start
  const double late = recoverable ? rng.uniform(0.8, 1.2) : rng.uniform(0.8, 2.2);
  const double cross_start_y = -(v_cross * (t_ego_cross + late) + 1.75);

  json lanes = json::array();
  lanes.push_back(lane_json(1, {-220.0, -1.75}, {220.0, -1.75}, 3.5, {}, 2, -1));
  lanes.push_back(lane_json(2, {220.0, 1.75}, {-220.0, 1.75}, 3.5, {}, 1, -1));
  lanes.push_back(lane_json(3, {1.75, -220.0}, {1.75, 220.0}, 3.5, {}, 4, -1));
  lanes.push_back(lane_json(4, {-1.75, 220.0}, {-1.75, -220.0}, 3.5, {}, 3, -1));

  json stop_lines = json::array();
  json signals = json::array();
  if (signalized) {
    stop_lines.push_back(json{{"p1", json::array({0.0, -6.5})},
                              {"p2", json::array({3.5, -6.5})},
                              {"lane", 3}});
    const double red_until = rng.uniform(3.5, 5.5);
    signals.push_back(json{
        {"stop_line", 0},
        {"phases", json::array({json{{"start", 0.0}, {"end", red_until}, {"state", "red"}}})}});
  }
  json map{{"lanes", std::move(lanes)},
           {"drivable", json::array({cross_polygon()})},
           {"stop_lines", std::move(stop_lines)},
           {"signals", std::move(signals)}};

  json others = json::array();
  others.push_back(
      track_json(1, 4.5, 2.0, "car", {1.75, cross_start_y}, kPi / 2.0, v_cross, 0.0));
  // oncoming background on the westbound lane
  others.push_back(track_json(2, 4.6, 2.0, "car", {rng.uniform(45.0, 60.0), 1.75}, kPi,
                              rng.uniform(7.0, 9.0), 0.0));
  // parked background car east of the intersection, off the ego corridor
  others.push_back(track_json(3, 4.4, 1.9, "car", {rng.uniform(9.0, 14.0), -4.1}, 0.0, 0.0, 0.0));

  return json{{"meta", meta_json()},
              {"map", std::move(map)},
              {"tracks", json{{"ego", track_json(0, 4.5, 2.0, "car", {ego_start_x, -1.75}, 0.0,
                                                 v_ego, a_ego)},
                              {"others", std::move(others)}}}};
}

json merge_scene(uint64_t seed) {
  SplitMix64 rng(seed);
  const double v_ego = rng.uniform(8.0, 11.0);
  const double v_merge = rng.uniform(8.0, 12.0);

  const Vec2 ramp_from{-60.0, -7.0};
  const Vec2 ramp_to{40.0, 0.0};
  json lanes = json::array();
  lanes.push_back(lane_json(1, {-80.0, 0.0}, {40.0, 0.0}, 3.5, {3}, -1, -1));
  lanes.push_back(lane_json(2, ramp_from, ramp_to, 3.5, {3}, -1, -1));
  lanes.push_back(lane_json(3, {40.0, 0.0}, {300.0, 0.0}, 3.5, {}, -1, -1));

  // ramp strip polygon around its centerline
  const Vec2 d = ramp_to - ramp_from;
  const double len = norm(d);
  const Vec2 u = d * (1.0 / len);
  const Vec2 n{-u.y, u.x};
  json ramp_poly = json::array();
  const Vec2 a = ramp_from - u * 8.0 + n * 3.0;
  const Vec2 b = ramp_from - u * 8.0 - n * 3.0;
  const Vec2 c = ramp_to + u * 8.0 - n * 3.0;
  const Vec2 e = ramp_to + u * 8.0 + n * 3.0;
  for (const Vec2& p : {a, b, c, e}) {
    ramp_poly.push_back(json::array({p.x, p.y}));
  }
  json map{{"lanes", std::move(lanes)},
           {"drivable", json::array({rect_polygon(-80.0, -5.5, 300.0, 5.5), std::move(ramp_poly)})},
           {"stop_lines", json::array()},
           {"signals", json::array()}};

  const double ramp_heading = std::atan2(d.y, d.x);
  json others = json::array();
  // merging vehicle well along the ramp, roughly abreast of the ego
  const double along = rng.uniform(42.0, 62.0);
  others.push_back(track_json(1, 4.5, 2.0, "car", {ramp_from.x + u.x * along,
                                                   ramp_from.y + u.y * along},
                              ramp_heading, v_merge, 0.0));
  // slow lead downstream of the merge point
  others.push_back(track_json(2, 4.8, 2.1, "car", {rng.uniform(50.0, 68.0), 0.0}, 0.0,
                              v_ego - rng.uniform(1.0, 2.5), 0.0));

  return json{{"meta", meta_json()},
              {"map", std::move(map)},
              {"tracks", json{{"ego", track_json(0, 4.5, 2.0, "car", {-rng.uniform(4.0, 16.0), 0.0},
                                                 0.0, v_ego, 0.0)},
                              {"others", std::move(others)}}}};
}

}  // namespace

json make_scene_json(SceneTemplate tmpl, uint64_t seed) {
  switch (tmpl) {
    case SceneTemplate::following: return following_scene(seed, false, false);
    case SceneTemplate::cut_in: return following_scene(seed, true, false);
    case SceneTemplate::crossing: return crossing_scene(seed, false, false);
    case SceneTemplate::crossing_signal: return crossing_scene(seed, true, false);
    case SceneTemplate::merge: return merge_scene(seed);
  }
  return following_scene(seed, false, false);
}

Scene make_scene(SceneTemplate tmpl, uint64_t seed, const std::string& id) {
  return scene_from_json(make_scene_json(tmpl, seed), id);
}

std::vector<CorpusEntry> make_corpus(int count, uint64_t seed, CorpusMix mix) {
  std::vector<CorpusEntry> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const uint64_t scene_seed = hash_combine(seed, static_cast<uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    json j;
    if (mix == CorpusMix::standard) {
      switch (i % 5) {
        case 0: j = following_scene(scene_seed, false, false); break;
        case 1: j = crossing_scene(scene_seed, false, false); break;
        case 2: j = following_scene(scene_seed, true, false); break;
        case 3: j = crossing_scene(scene_seed, true, false); break;
        default: j = merge_scene(scene_seed); break;
      }
    } else {
      // recoverable near-miss emphasis: reactive egos escape round 0 but
      // retries can re-time the attack
      j = crossing_scene(scene_seed, false, true);
    }
    out.push_back({name, std::move(j)});
  }
  return out;
}

void write_corpus(const std::string& dir, int count, uint64_t seed, CorpusMix mix) {
  std::filesystem::create_directories(dir);
  for (const CorpusEntry& e : make_corpus(count, seed, mix)) {
    write_text_file(dir + "/" + e.id + ".json", canonical_dump(e.scenario));
  }
}

}  // namespace advgen
