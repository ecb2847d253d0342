#include "advgen/scene_io.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "advgen/json_canonical.hpp"

namespace advgen {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SceneParseError(path + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) {
    fail(path, "expected object");
  }
  const auto it = j.find(key);
  if (it == j.end()) {
    fail(path + "." + key, "missing field");
  }
  return *it;
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) {
    fail(path, "expected number");
  }
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    fail(path, "expected integer");
  }
  return j.get<int>();
}

Vec2 point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) {
    fail(path, "expected [x, y]");
  }
  return {num(j[0], path + "[0]"), num(j[1], path + "[1]")};
}

std::vector<Vec2> point_list(const json& j, const std::string& path) {
  if (!j.is_array()) {
    fail(path, "expected array of points");
  }
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(point(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Track parse_track(const json& j, const std::string& path) {
  Track t;
  t.vehicle_id = integer(member(j, "id", path), path + ".id");
  t.size.length = num(member(j, "length", path), path + ".length");
  t.size.width = num(member(j, "width", path), path + ".width");
  const std::string cat = member(j, "category", path).is_string()
                              ? member(j, "category", path).get<std::string>()
                              : std::string();
  const auto c = category_from_string(cat);
  if (!c) {
    fail(path + ".category", "unknown category '" + cat + "'");
  }
  t.category = *c;
  const json& frames = member(j, "frames", path);
  if (!frames.is_array()) {
    fail(path + ".frames", "expected array");
  }
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::string fp = path + ".frames[" + std::to_string(i) + "]";
    const json& f = frames[i];
    if (!f.is_array() || f.size() != 6) {
      fail(fp, "expected [x, y, v, a, theta, valid]");
    }
    VehicleState s;
    s.x = num(f[0], fp + "[0]");
    s.y = num(f[1], fp + "[1]");
    s.v = num(f[2], fp + "[2]");
    s.a = num(f[3], fp + "[3]");
    s.theta = wrap_angle(num(f[4], fp + "[4]"));
    t.states.push_back(s);
    t.valid.push_back(num(f[5], fp + "[5]") != 0.0 ? 1 : 0);
  }
  return t;
}

// Fills interior gaps of <= 3 frames; longer interior gaps truncate the rest
// of the track. Leading/trailing invalid runs mean the vehicle is absent.
void repair_track(Track& t) {
  const size_t n = t.states.size();
  size_t first = n, last = n;
  for (size_t i = 0; i < n; ++i) {
    if (t.valid[i]) {
      if (first == n) first = i;
      last = i;
    }
  }
  if (first == n) {
    return;  // never present
  }
  size_t i = first;
  while (i <= last) {
    if (t.valid[i]) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j <= last && !t.valid[j]) {
      ++j;
    }
    const size_t gap = j - i;
    if (gap <= 3) {
      const VehicleState& a = t.states[i - 1];
      const VehicleState& b = t.states[j];
      for (size_t k = i; k < j; ++k) {
        const double u = static_cast<double>(k - i + 1) / static_cast<double>(gap + 1);
        VehicleState s;
        s.x = a.x + (b.x - a.x) * u;
        s.y = a.y + (b.y - a.y) * u;
        s.v = a.v + (b.v - a.v) * u;
        s.a = a.a + (b.a - a.a) * u;
        s.theta = wrap_angle(a.theta + wrap_angle(b.theta - a.theta) * u);
        t.states[k] = s;
        t.valid[k] = 1;
      }
      i = j;
    } else {
      for (size_t k = i; k < n; ++k) {
        t.valid[k] = 0;
      }
      return;
    }
  }
}

bool polygon_is_simple(const std::vector<Vec2>& poly) {
  const size_t n = poly.size();
  if (n < 3) {
    return false;
  }
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a1 = poly[i];
    const Vec2 a2 = poly[(i + 1) % n];
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) {
        continue;  // adjacent edges share a vertex
      }
      if (segments_intersect(a1, a2, poly[j], poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

void transform_to_anchor(Scene& scene) {
  const auto loc = [&](Vec2& p) { p = scene.anchor.to_local(p); };
  auto fix_track = [&](Track& t) {
    for (VehicleState& s : t.states) {
      Vec2 p = s.pos();
      loc(p);
      s.x = p.x;
      s.y = p.y;
      s.theta = wrap_angle(s.theta - scene.anchor.heading);
    }
  };
  fix_track(scene.ego);
  for (Track& t : scene.others) {
    fix_track(t);
  }
  for (Lane& l : scene.map.lanes) {
    for (Vec2& p : l.centerline) {
      loc(p);
    }
  }
  for (auto& poly : scene.map.drivable) {
    for (Vec2& p : poly) {
      loc(p);
    }
  }
  for (StopLine& s : scene.map.stop_lines) {
    loc(s.p1);
    loc(s.p2);
  }
}

void validate(Scene& scene) {
  std::vector<std::string> errors;
  const int frames = scene.total_frames();
  auto check_track = [&](const Track& t, const char* label) {
    if (static_cast<int>(t.states.size()) != frames) {
      errors.push_back(std::string(label) + " " + std::to_string(t.vehicle_id) + ": has " +
                       std::to_string(t.states.size()) + " frames, expected " +
                       std::to_string(frames));
      return;
    }
    if (t.size.length <= 0.0 || t.size.width <= 0.0) {
      errors.push_back(std::string(label) + " " + std::to_string(t.vehicle_id) +
                       ": nonpositive size");
    }
    for (size_t i = 0; i < t.states.size(); ++i) {
      if (t.valid[i] && t.states[i].v < 0.0) {
        errors.push_back(std::string(label) + " " + std::to_string(t.vehicle_id) + ": v < 0 at frame " +
                         std::to_string(i));
        break;
      }
    }
  };
  check_track(scene.ego, "ego");
  if (!scene.ego.valid.empty() && !scene.ego.valid.front()) {
    errors.push_back("ego " + std::to_string(scene.ego.vehicle_id) + ": missing frame 0");
  }
  for (size_t i = 0; i < scene.ego.valid.size(); ++i) {
    if (!scene.ego.valid[i]) {
      errors.push_back("ego " + std::to_string(scene.ego.vehicle_id) + ": missing frame " +
                       std::to_string(i));
      break;
    }
  }
  for (const Track& t : scene.others) {
    check_track(t, "track");
    if (t.vehicle_id == scene.ego.vehicle_id) {
      errors.push_back("track " + std::to_string(t.vehicle_id) + ": duplicates ego id");
    }
  }
  for (const Lane& l : scene.map.lanes) {
    if (l.centerline.size() < 2) {
      errors.push_back("lane " + std::to_string(l.id) + ": centerline needs >= 2 points");
    }
    if (l.width <= 0.0) {
      errors.push_back("lane " + std::to_string(l.id) + ": nonpositive width");
    }
  }
  for (size_t i = 0; i < scene.map.drivable.size(); ++i) {
    if (!polygon_is_simple(scene.map.drivable[i])) {
      errors.push_back("drivable[" + std::to_string(i) + "]: polygon not simple");
    }
  }
  for (size_t i = 0; i < scene.map.signals.size(); ++i) {
    const Signal& s = scene.map.signals[i];
    if (s.stop_line < 0 || s.stop_line >= static_cast<int>(scene.map.stop_lines.size())) {
      errors.push_back("signal[" + std::to_string(i) + "]: stop line " +
                       std::to_string(s.stop_line) + " does not exist");
    }
  }
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "scene validation failed:";
    for (const std::string& e : errors) {
      msg << "\n  - " << e;
    }
    throw SceneValidationError(msg.str());
  }

  // Soft consistency check: step length vs v*dt within 1 m.
  auto warn_track = [&](const Track& t) {
    for (size_t i = 0; i + 1 < t.states.size(); ++i) {
      if (!t.valid[i] || !t.valid[i + 1]) {
        continue;
      }
      const double step = distance(t.states[i].pos(), t.states[i + 1].pos());
      if (std::fabs(step - t.states[i].v * scene.dt) > 1.0) {
        scene.load_warnings.push_back("track " + std::to_string(t.vehicle_id) +
                                      ": step/speed mismatch at frame " + std::to_string(i));
        return;
      }
    }
  };
  warn_track(scene.ego);
  for (const Track& t : scene.others) {
    warn_track(t);
  }
}

}  // namespace

Scene scene_from_json(const json& j, const std::string& scene_id) {
  Scene scene;
  scene.id = scene_id;
  if (j.contains("meta")) {
    const json& meta = j.at("meta");
    if (meta.contains("dt")) scene.dt = num(meta["dt"], "meta.dt");
    if (meta.contains("t_obs")) scene.t_obs_frames = integer(meta["t_obs"], "meta.t_obs");
    if (meta.contains("t_pred")) scene.t_pred_frames = integer(meta["t_pred"], "meta.t_pred");
  }
  if (scene.dt <= 0.0 || scene.t_obs_frames < 1 || scene.t_pred_frames < 1) {
    fail("meta", "dt must be > 0 and horizons >= 1");
  }

  const json& map = member(j, "map", "");
  const json& lanes = member(map, "lanes", "map");
  for (size_t i = 0; i < lanes.size(); ++i) {
    const std::string lp = "map.lanes[" + std::to_string(i) + "]";
    const json& lj = lanes[i];
    Lane lane;
    lane.id = integer(member(lj, "id", lp), lp + ".id");
    lane.centerline = point_list(member(lj, "centerline", lp), lp + ".centerline");
    lane.width = num(member(lj, "width", lp), lp + ".width");
    if (lj.contains("successors")) {
      for (size_t k = 0; k < lj["successors"].size(); ++k) {
        lane.successors.push_back(integer(lj["successors"][k], lp + ".successors"));
      }
    }
    if (lj.contains("left")) lane.left = integer(lj["left"], lp + ".left");
    if (lj.contains("right")) lane.right = integer(lj["right"], lp + ".right");
    scene.map.lanes.push_back(std::move(lane));
  }
  if (map.contains("drivable")) {
    const json& dj = map["drivable"];
    for (size_t i = 0; i < dj.size(); ++i) {
      scene.map.drivable.push_back(point_list(dj[i], "map.drivable[" + std::to_string(i) + "]"));
    }
  }
  if (map.contains("stop_lines")) {
    const json& sj = map["stop_lines"];
    for (size_t i = 0; i < sj.size(); ++i) {
      const std::string sp = "map.stop_lines[" + std::to_string(i) + "]";
      StopLine s;
      s.p1 = point(member(sj[i], "p1", sp), sp + ".p1");
      s.p2 = point(member(sj[i], "p2", sp), sp + ".p2");
      s.lane_id = integer(member(sj[i], "lane", sp), sp + ".lane");
      scene.map.stop_lines.push_back(s);
    }
  }
  if (map.contains("signals")) {
    const json& sj = map["signals"];
    for (size_t i = 0; i < sj.size(); ++i) {
      const std::string sp = "map.signals[" + std::to_string(i) + "]";
      Signal sig;
      sig.stop_line = integer(member(sj[i], "stop_line", sp), sp + ".stop_line");
      const json& phases = member(sj[i], "phases", sp);
      for (size_t k = 0; k < phases.size(); ++k) {
        const std::string pp = sp + ".phases[" + std::to_string(k) + "]";
        SignalPhase ph;
        ph.start = num(member(phases[k], "start", pp), pp + ".start");
        ph.end = num(member(phases[k], "end", pp), pp + ".end");
        const auto st = signal_state_from_string(member(phases[k], "state", pp).get<std::string>());
        if (!st) {
          fail(pp + ".state", "unknown signal state");
        }
        ph.state = *st;
        sig.phases.push_back(ph);
      }
      scene.map.signals.push_back(std::move(sig));
    }
  }

  const json& tracks = member(j, "tracks", "");
  scene.ego = parse_track(member(tracks, "ego", "tracks"), "tracks.ego");
  if (tracks.contains("others")) {
    const json& oj = tracks["others"];
    for (size_t i = 0; i < oj.size(); ++i) {
      scene.others.push_back(parse_track(oj[i], "tracks.others[" + std::to_string(i) + "]"));
    }
  }

  repair_track(scene.ego);
  for (Track& t : scene.others) {
    repair_track(t);
  }
  validate(scene);

  const VehicleState& anchor_state = scene.ego.states[static_cast<size_t>(scene.decision_frame())];
  scene.anchor.origin = anchor_state.pos();
  scene.anchor.heading = anchor_state.theta;
  transform_to_anchor(scene);
  return scene;
}

Scene load_scene(const std::string& path) {
  json j;
  try {
    j = parse_json_file(path);
  } catch (const nlohmann::json::parse_error& e) {
    throw SceneParseError(path + ": " + e.what());
  }
  return scene_from_json(j, std::filesystem::path(path).stem().string());
}

namespace {

json track_to_json(const Scene& scene, const Track& t) {
  json out;
  out["id"] = t.vehicle_id;
  out["length"] = t.size.length;
  out["width"] = t.size.width;
  out["category"] = to_string(t.category);
  json frames = json::array();
  for (size_t i = 0; i < t.states.size(); ++i) {
    const VehicleState& s = t.states[i];
    const Vec2 wp = scene.anchor.to_world(s.pos());
    frames.push_back(json::array({wp.x, wp.y, s.v, s.a,
                                  wrap_angle(s.theta + scene.anchor.heading),
                                  t.valid[i] ? 1 : 0}));
  }
  out["frames"] = std::move(frames);
  return out;
}

json points_json(const Scene& scene, const std::vector<Vec2>& pts) {
  json out = json::array();
  for (const Vec2& p : pts) {
    const Vec2 wp = scene.anchor.to_world(p);
    out.push_back(json::array({wp.x, wp.y}));
  }
  return out;
}

}  // namespace

json scene_to_json(const Scene& scene) {
  json j;
  j["meta"] = {{"dt", scene.dt}, {"t_obs", scene.t_obs_frames}, {"t_pred", scene.t_pred_frames}};

  json lanes = json::array();
  for (const Lane& l : scene.map.lanes) {
    json lj;
    lj["id"] = l.id;
    lj["centerline"] = points_json(scene, l.centerline);
    lj["width"] = l.width;
    lj["successors"] = l.successors;
    lj["left"] = l.left;
    lj["right"] = l.right;
    lanes.push_back(std::move(lj));
  }
  json map;
  map["lanes"] = std::move(lanes);
  json drivable = json::array();
  for (const auto& poly : scene.map.drivable) {
    drivable.push_back(points_json(scene, poly));
  }
  map["drivable"] = std::move(drivable);
  json stop_lines = json::array();
  for (const StopLine& s : scene.map.stop_lines) {
    const Vec2 p1 = scene.anchor.to_world(s.p1);
    const Vec2 p2 = scene.anchor.to_world(s.p2);
    stop_lines.push_back({{"p1", json::array({p1.x, p1.y})},
                          {"p2", json::array({p2.x, p2.y})},
                          {"lane", s.lane_id}});
  }
  map["stop_lines"] = std::move(stop_lines);
  json signals = json::array();
  for (const Signal& s : scene.map.signals) {
    json phases = json::array();
    for (const SignalPhase& p : s.phases) {
      phases.push_back({{"start", p.start}, {"end", p.end}, {"state", to_string(p.state)}});
    }
    signals.push_back({{"stop_line", s.stop_line}, {"phases", std::move(phases)}});
  }
  map["signals"] = std::move(signals);
  j["map"] = std::move(map);

  json tracks;
  tracks["ego"] = track_to_json(scene, scene.ego);
  json others = json::array();
  for (const Track& t : scene.others) {
    others.push_back(track_to_json(scene, t));
  }
  tracks["others"] = std::move(others);
  j["tracks"] = std::move(tracks);
  return j;
}

std::string save_scene_canonical(const Scene& scene) {
  return canonical_dump(scene_to_json(scene));
}

}  // namespace advgen
