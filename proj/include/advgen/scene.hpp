#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgen/geom.hpp"

namespace advgen {

enum class VehicleCategory { car, truck, cyclist, pedestrian };

const char* to_string(VehicleCategory c);
std::optional<VehicleCategory> category_from_string(const std::string& s);

// Kinematic state of one vehicle at one frame. Positions are in the scene
// frame (ego pose at the decision frame is the origin); theta is in (-pi, pi].
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;      // speed, >= 0
  double a = 0.0;      // signed longitudinal acceleration
  double theta = 0.0;  // heading

  Vec2 pos() const { return {x, y}; }
};

struct BoxSize {
  double length = 4.5;
  double width = 2.0;
};

inline OrientedBox state_box(const VehicleState& s, const BoxSize& size) {
  return OrientedBox{{s.x, s.y}, size.length * 0.5, size.width * 0.5, s.theta};
}

struct Track {
  int vehicle_id = 0;
  BoxSize size;
  VehicleCategory category = VehicleCategory::car;
  std::vector<VehicleState> states;  // t_obs + t_pred frames at fixed dt
  std::vector<uint8_t> valid;        // per-frame presence

  bool valid_at(size_t frame) const { return frame < valid.size() && valid[frame] != 0; }
};

struct Lane {
  int id = 0;
  std::vector<Vec2> centerline;
  double width = 3.5;
  std::vector<int> successors;
  int left = -1;   // -1 = no neighbor
  int right = -1;
};

struct StopLine {
  Vec2 p1;
  Vec2 p2;
  int lane_id = 0;
};

enum class SignalState { green, yellow, red };

const char* to_string(SignalState s);
std::optional<SignalState> signal_state_from_string(const std::string& s);

struct SignalPhase {
  double start = 0.0;  // seconds from scenario start
  double end = 0.0;
  SignalState state = SignalState::green;
};

struct Signal {
  int stop_line = 0;  // index into MapModel::stop_lines
  std::vector<SignalPhase> phases;

  // Phases are a schedule; gaps default to green.
  SignalState state_at(double t) const;
};

struct MapModel {
  std::vector<Lane> lanes;
  std::vector<std::vector<Vec2>> drivable;  // simple polygons
  std::vector<StopLine> stop_lines;
  std::vector<Signal> signals;

  const Lane* lane_by_id(int id) const;
  bool in_drivable(const Vec2& p) const;
};

// World pose of the ego at the decision frame; scene coordinates are relative
// to it. Kept so canonical re-serialization can restore file coordinates.
struct FrameAnchor {
  Vec2 origin;
  double heading = 0.0;

  Vec2 to_world(const Vec2& p) const { return origin + rotate(p, heading); }
  Vec2 to_local(const Vec2& p) const { return rotate(p - origin, -heading); }
};

struct Scene {
  MapModel map;
  Track ego;
  std::vector<Track> others;
  double dt = 0.1;
  int t_obs_frames = 10;
  int t_pred_frames = 80;
  FrameAnchor anchor;
  std::string id;
  std::vector<std::string> load_warnings;

  int total_frames() const { return t_obs_frames + t_pred_frames; }
  // Index of the last observed frame; generation starts here.
  int decision_frame() const { return t_obs_frames - 1; }
  double horizon_seconds() const { return t_pred_frames * dt; }
  const Track* track_by_id(int id) const;
  const VehicleState& current_state(const Track& t) const {
    return t.states[static_cast<size_t>(decision_frame())];
  }
};

// Future motion of one vehicle: t_pred_frames states at the scene dt, where
// states[0] is the vehicle state at the decision frame.
struct Trajectory {
  int vehicle_id = 0;
  std::vector<VehicleState> states;
};

// Logged ego future used as the round-0 attack reference and by the replay
// controller.
Trajectory replay_trajectory(const Scene& scene, const Track& track);

// Minimum over frames of box-to-box clearance; 0 as soon as any frame
// collides. Throws std::invalid_argument on mismatched horizons.
double min_pairwise_distance(const Trajectory& a, const Trajectory& b,
                             const BoxSize& size_a, const BoxSize& size_b);

// Nearest lane whose lateral offset is within width/2 + 0.25 m. Falls back to
// the nearest lane while inside the drivable area; nullopt means off-road.
// Throws std::invalid_argument when the map has no lanes.
std::optional<int> assign_lane(const MapModel& map, const Vec2& p);

constexpr double kLaneAssignSlack = 0.25;  // absorbs polyline discretization

}  // namespace advgen
