#include "advgen/scene.hpp"

#include <algorithm>
#include <limits>

namespace advgen {

const char* to_string(VehicleCategory c) {
  switch (c) {
    case VehicleCategory::car: return "car";
    case VehicleCategory::truck: return "truck";
    case VehicleCategory::cyclist: return "cyclist";
    case VehicleCategory::pedestrian: return "pedestrian";
  }
  return "car";
}

std::optional<VehicleCategory> category_from_string(const std::string& s) {
  if (s == "car") return VehicleCategory::car;
  if (s == "truck") return VehicleCategory::truck;
  if (s == "cyclist") return VehicleCategory::cyclist;
  if (s == "pedestrian") return VehicleCategory::pedestrian;
  return std::nullopt;
}

const char* to_string(SignalState s) {
  switch (s) {
    case SignalState::green: return "green";
    case SignalState::yellow: return "yellow";
    case SignalState::red: return "red";
  }
  return "green";
}

std::optional<SignalState> signal_state_from_string(const std::string& s) {
  if (s == "green") return SignalState::green;
  if (s == "yellow") return SignalState::yellow;
  if (s == "red") return SignalState::red;
  return std::nullopt;
}

SignalState Signal::state_at(double t) const {
  for (const SignalPhase& p : phases) {
    if (t >= p.start && t < p.end) {
      return p.state;
    }
  }
  return SignalState::green;
}

const Lane* MapModel::lane_by_id(int id) const {
  for (const Lane& l : lanes) {
    if (l.id == id) {
      return &l;
    }
  }
  return nullptr;
}

bool MapModel::in_drivable(const Vec2& p) const {
  for (const auto& poly : drivable) {
    if (point_in_polygon(poly, p)) {
      return true;
    }
  }
  return false;
}

const Track* Scene::track_by_id(int id) const {
  if (ego.vehicle_id == id) {
    return &ego;
  }
  for (const Track& t : others) {
    if (t.vehicle_id == id) {
      return &t;
    }
  }
  return nullptr;
}

Trajectory replay_trajectory(const Scene& scene, const Track& track) {
  Trajectory traj;
  traj.vehicle_id = track.vehicle_id;
  const size_t start = static_cast<size_t>(scene.decision_frame());
  traj.states.reserve(static_cast<size_t>(scene.t_pred_frames));
  for (int k = 0; k < scene.t_pred_frames; ++k) {
    const size_t f = start + static_cast<size_t>(k);
    traj.states.push_back(f < track.states.size() ? track.states[f] : track.states.back());
  }
  return traj;
}

double min_pairwise_distance(const Trajectory& a, const Trajectory& b,
                             const BoxSize& size_a, const BoxSize& size_b) {
  if (a.states.size() != b.states.size()) {
    throw std::invalid_argument("min_pairwise_distance: mismatched horizons");
  }
  double best = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < a.states.size(); ++k) {
    const double d = box_clearance(state_box(a.states[k], size_a), state_box(b.states[k], size_b));
    if (d <= 0.0) {
      return 0.0;
    }
    best = std::min(best, d);
  }
  return best;
}

std::optional<int> assign_lane(const MapModel& map, const Vec2& p) {
  if (map.lanes.empty()) {
    throw std::invalid_argument("assign_lane: map has no lanes");
  }
  double best_off = std::numeric_limits<double>::infinity();
  int best_id = -1;
  double nearest_off = std::numeric_limits<double>::infinity();
  int nearest_id = -1;
  for (const Lane& lane : map.lanes) {
    if (lane.centerline.size() < 2) {
      continue;
    }
    const Polyline pl(lane.centerline);
    const double off = std::fabs(pl.project(p).lateral);
    if (off < nearest_off || (off == nearest_off && lane.id < nearest_id)) {
      nearest_off = off;
      nearest_id = lane.id;
    }
    if (off <= lane.width * 0.5 + kLaneAssignSlack) {
      if (off < best_off || (off == best_off && lane.id < best_id)) {
        best_off = off;
        best_id = lane.id;
      }
    }
  }
  if (best_id >= 0) {
    return best_id;
  }
  if (map.in_drivable(p) && nearest_id >= 0) {
    return nearest_id;  // drivable but between corridors: attach to nearest
  }
  return std::nullopt;
}

}  // namespace advgen
