#include "advgen/scene_features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace advgen {

namespace {

constexpr double kZoneReach = 50.0;       // longitudinal extent of relative zones
constexpr double kLaneHalf = 2.0;         // in-corridor lateral half width
constexpr double kAdjacentMax = 6.0;      // outer edge of the side zones
constexpr double kCrossingAngle = kPi / 6.0;

const VehicleState* current_of(const Scene& scene, int vehicle_id) {
  const Track* t = scene.track_by_id(vehicle_id);
  if (t == nullptr) {
    return nullptr;
  }
  const size_t k = static_cast<size_t>(scene.decision_frame());
  if (!t->valid_at(k)) {
    return nullptr;
  }
  return &t->states[k];
}

// Successor closure (depth-limited) used for chain relations.
std::set<int> lane_chain(const MapModel& map, int lane_id, int depth = 3) {
  std::set<int> out;
  std::deque<std::pair<int, int>> queue{{lane_id, 0}};
  while (!queue.empty()) {
    auto [id, d] = queue.front();
    queue.pop_front();
    if (!out.insert(id).second || d >= depth) {
      continue;
    }
    const Lane* l = map.lane_by_id(id);
    if (l == nullptr) {
      continue;
    }
    for (int s : l->successors) {
      queue.push_back({s, d + 1});
    }
  }
  return out;
}

struct PolyCrossing {
  bool crosses = false;
  double angle = 0.0;  // absolute heading difference in [0, pi]
};

PolyCrossing polylines_cross(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  for (size_t i = 0; i + 1 < a.size(); ++i) {
    for (size_t j = 0; j + 1 < b.size(); ++j) {
      Vec2 p;
      if (segment_intersection_point(a[i], a[i + 1], b[j], b[j + 1], &p)) {
        const Vec2 da = a[i + 1] - a[i];
        const Vec2 db = b[j + 1] - b[j];
        const double ang = std::fabs(wrap_angle(std::atan2(da.y, da.x) - std::atan2(db.y, db.x)));
        return {true, ang};
      }
    }
  }
  return {};
}

bool chains_share_successor(const MapModel& map, const std::set<int>& ca, const std::set<int>& cb) {
  for (int a : ca) {
    const Lane* la = map.lane_by_id(a);
    if (la == nullptr) continue;
    for (int sa : la->successors) {
      for (int b : cb) {
        if (b == a) continue;
        const Lane* lb = map.lane_by_id(b);
        if (lb == nullptr) continue;
        for (int sb : lb->successors) {
          if (sa == sb) {
            return true;
          }
        }
      }
    }
  }
  return false;
}

}  // namespace

const char* to_string(RelativeZone z) {
  switch (z) {
    case RelativeZone::front: return "front";
    case RelativeZone::front_left: return "front_left";
    case RelativeZone::front_right: return "front_right";
    case RelativeZone::crossing_zone: return "crossing_zone";
    case RelativeZone::rear: return "rear";
    case RelativeZone::merge_zone: return "merge_zone";
  }
  return "front";
}

std::optional<RelativeZone> zone_from_string(const std::string& s) {
  if (s == "front") return RelativeZone::front;
  if (s == "front_left") return RelativeZone::front_left;
  if (s == "front_right") return RelativeZone::front_right;
  if (s == "crossing_zone") return RelativeZone::crossing_zone;
  if (s == "rear") return RelativeZone::rear;
  if (s == "merge_zone") return RelativeZone::merge_zone;
  return std::nullopt;
}

const char* to_string(TriggerBehavior b) {
  switch (b) {
    case TriggerBehavior::hard_brake: return "hard_brake";
    case TriggerBehavior::late_merge: return "late_merge";
    case TriggerBehavior::aggressive_cross: return "aggressive_cross";
    case TriggerBehavior::yield_failure: return "yield_failure";
    case TriggerBehavior::cut_in_close: return "cut_in_close";
    case TriggerBehavior::turn_across: return "turn_across";
  }
  return "hard_brake";
}

std::optional<TriggerBehavior> trigger_from_string(const std::string& s) {
  if (s == "hard_brake") return TriggerBehavior::hard_brake;
  if (s == "late_merge") return TriggerBehavior::late_merge;
  if (s == "aggressive_cross") return TriggerBehavior::aggressive_cross;
  if (s == "yield_failure") return TriggerBehavior::yield_failure;
  if (s == "cut_in_close") return TriggerBehavior::cut_in_close;
  if (s == "turn_across") return TriggerBehavior::turn_across;
  return std::nullopt;
}

const char* to_string(RoadTopology t) {
  switch (t) {
    case RoadTopology::any: return "any";
    case RoadTopology::straight: return "straight";
    case RoadTopology::intersection: return "intersection";
    case RoadTopology::merge_road: return "merge";
  }
  return "any";
}

std::optional<RoadTopology> topology_from_string(const std::string& s) {
  if (s == "any") return RoadTopology::any;
  if (s == "straight") return RoadTopology::straight;
  if (s == "intersection") return RoadTopology::intersection;
  if (s == "merge") return RoadTopology::merge_road;
  return std::nullopt;
}

RelPose relative_pose(const Scene& scene, int vehicle_id) {
  RelPose out;
  const VehicleState* v = current_of(scene, vehicle_id);
  const VehicleState& ego = scene.current_state(scene.ego);
  if (v == nullptr) {
    return out;
  }
  const Vec2 d = rotate(v->pos() - ego.pos(), -ego.theta);
  out.forward = d.x;
  out.left = d.y;
  out.range = norm(d);
  out.bearing = std::atan2(d.y, d.x);
  return out;
}

LaneRelation lane_relation(const Scene& scene, int vehicle_id) {
  const VehicleState* v = current_of(scene, vehicle_id);
  if (v == nullptr) {
    return LaneRelation::offroad;
  }
  const VehicleState& ego = scene.current_state(scene.ego);
  const auto ego_lane = assign_lane(scene.map, ego.pos());
  const auto veh_lane = assign_lane(scene.map, v->pos());
  if (!veh_lane) {
    return LaneRelation::offroad;
  }
  if (!ego_lane) {
    return LaneRelation::distant;
  }
  if (*ego_lane == *veh_lane) {
    return LaneRelation::same;
  }
  const auto ego_chain = lane_chain(scene.map, *ego_lane);
  const auto veh_chain = lane_chain(scene.map, *veh_lane);
  if (ego_chain.count(*veh_lane) || veh_chain.count(*ego_lane)) {
    return LaneRelation::same;
  }
  for (int a : ego_chain) {
    const Lane* la = scene.map.lane_by_id(a);
    if (la == nullptr) continue;
    for (int b : veh_chain) {
      if (la->left == b || la->right == b) {
        return LaneRelation::adjacent;
      }
      const Lane* lb = scene.map.lane_by_id(b);
      if (lb != nullptr && (lb->left == a || lb->right == a)) {
        return LaneRelation::adjacent;
      }
    }
  }
  if (chains_share_successor(scene.map, ego_chain, veh_chain)) {
    return LaneRelation::merging;
  }
  for (int a : ego_chain) {
    const Lane* la = scene.map.lane_by_id(a);
    if (la == nullptr) continue;
    for (int b : veh_chain) {
      const Lane* lb = scene.map.lane_by_id(b);
      if (lb == nullptr) continue;
      const PolyCrossing c = polylines_cross(la->centerline, lb->centerline);
      if (c.crosses) {
        return c.angle >= kCrossingAngle ? LaneRelation::crossing : LaneRelation::merging;
      }
    }
  }
  return LaneRelation::distant;
}

int lane_graph_hops(const MapModel& map, int from_lane, int to_lane) {
  if (from_lane == to_lane) {
    return 0;
  }
  std::map<int, std::set<int>> edges;
  for (const Lane& l : map.lanes) {
    for (int s : l.successors) {
      edges[l.id].insert(s);
      edges[s].insert(l.id);
    }
    if (l.left >= 0) {
      edges[l.id].insert(l.left);
      edges[l.left].insert(l.id);
    }
    if (l.right >= 0) {
      edges[l.id].insert(l.right);
      edges[l.right].insert(l.id);
    }
  }
  std::map<int, int> dist{{from_lane, 0}};
  std::deque<int> queue{from_lane};
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    for (int nxt : edges[cur]) {
      if (dist.count(nxt)) {
        continue;
      }
      dist[nxt] = dist[cur] + 1;
      if (nxt == to_lane) {
        return dist[nxt];
      }
      queue.push_back(nxt);
    }
  }
  return -1;
}

RoadTopology detect_topology(const MapModel& map) {
  bool merge_seen = false;
  for (size_t i = 0; i < map.lanes.size(); ++i) {
    for (size_t j = i + 1; j < map.lanes.size(); ++j) {
      const Lane& a = map.lanes[i];
      const Lane& b = map.lanes[j];
      const bool related = std::find(a.successors.begin(), a.successors.end(), b.id) !=
                               a.successors.end() ||
                           std::find(b.successors.begin(), b.successors.end(), a.id) !=
                               b.successors.end();
      if (related) {
        continue;
      }
      for (int sa : a.successors) {
        for (int sb : b.successors) {
          if (sa == sb) {
            merge_seen = true;
          }
        }
      }
      const PolyCrossing c = polylines_cross(a.centerline, b.centerline);
      if (c.crosses) {
        const double folded = std::min(c.angle, kPi - c.angle);
        if (folded >= kCrossingAngle) {
          return RoadTopology::intersection;
        }
        merge_seen = true;
      }
    }
  }
  return merge_seen ? RoadTopology::merge_road : RoadTopology::straight;
}

bool occupies_zone(const Scene& scene, int vehicle_id, RelativeZone zone) {
  const RelPose rp = relative_pose(scene, vehicle_id);
  if (current_of(scene, vehicle_id) == nullptr) {
    return false;
  }
  switch (zone) {
    case RelativeZone::front:
      return rp.forward > 0.0 && rp.forward <= kZoneReach && std::fabs(rp.left) <= kLaneHalf;
    case RelativeZone::front_left:
      return rp.forward > 0.0 && rp.forward <= kZoneReach && rp.left > kLaneHalf &&
             rp.left <= kAdjacentMax;
    case RelativeZone::front_right:
      return rp.forward > 0.0 && rp.forward <= kZoneReach && rp.left < -kLaneHalf &&
             rp.left >= -kAdjacentMax;
    case RelativeZone::rear:
      return rp.forward < 0.0 && rp.forward >= -kZoneReach && std::fabs(rp.left) <= kLaneHalf;
    case RelativeZone::crossing_zone: {
      if (lane_relation(scene, vehicle_id) != LaneRelation::crossing) {
        return false;
      }
      const ConflictEstimate c = estimate_conflict(scene, vehicle_id);
      if (!c.exists) {
        return false;
      }
      const VehicleState& ego = scene.current_state(scene.ego);
      return rotate(c.point - ego.pos(), -ego.theta).x > 0.0;
    }
    case RelativeZone::merge_zone:
      return lane_relation(scene, vehicle_id) == LaneRelation::merging &&
             rp.forward > -20.0 && rp.forward <= kZoneReach;
  }
  return false;
}

double closing_speed(const Scene& scene, int vehicle_id) {
  const VehicleState* v = current_of(scene, vehicle_id);
  if (v == nullptr) {
    return 0.0;
  }
  const VehicleState& ego = scene.current_state(scene.ego);
  const Vec2 rel_pos = v->pos() - ego.pos();
  const double range = std::max(norm(rel_pos), 1e-6);
  const Vec2 rel_vel = heading_dir(v->theta) * v->v - heading_dir(ego.theta) * ego.v;
  return -dot(rel_pos, rel_vel) / range;
}

bool trigger_trend_match(const Scene& scene, int vehicle_id, TriggerBehavior trigger) {
  const VehicleState* v = current_of(scene, vehicle_id);
  if (v == nullptr) {
    return false;
  }
  const VehicleState& ego = scene.current_state(scene.ego);
  const RelPose rp = relative_pose(scene, vehicle_id);
  const LaneRelation rel = lane_relation(scene, vehicle_id);
  const double closing = closing_speed(scene, vehicle_id);
  switch (trigger) {
    case TriggerBehavior::hard_brake:
      return rp.forward > 0.0 && std::fabs(rp.left) <= 3.0 && (v->a <= -0.5 || closing > 0.2);
    case TriggerBehavior::late_merge:
      return rel == LaneRelation::merging && rp.forward > -5.0;
    case TriggerBehavior::aggressive_cross:
      return rel == LaneRelation::crossing && v->v > 1.0 && estimate_conflict(scene, vehicle_id).exists;
    case TriggerBehavior::yield_failure:
      return (rel == LaneRelation::crossing || rel == LaneRelation::merging) && v->a > -0.5 &&
             estimate_conflict(scene, vehicle_id).exists;
    case TriggerBehavior::cut_in_close:
      return std::fabs(rp.left) > 1.5 && std::fabs(rp.left) <= kAdjacentMax &&
             rp.forward > -5.0 && rp.forward <= 30.0 && v->v >= 0.6 * std::max(ego.v, 1.0);
    case TriggerBehavior::turn_across: {
      const Track* t = scene.track_by_id(vehicle_id);
      return t != nullptr && heading_rate_std(scene, *t) > 0.05 && rp.forward > 0.0;
    }
  }
  return false;
}

bool trigger_category_match(const Scene& scene, int vehicle_id, TriggerBehavior trigger) {
  const Track* t = scene.track_by_id(vehicle_id);
  const VehicleState* v = current_of(scene, vehicle_id);
  if (t == nullptr || v == nullptr) {
    return false;
  }
  const bool vru = t->category == VehicleCategory::pedestrian || t->category == VehicleCategory::cyclist;
  switch (trigger) {
    case TriggerBehavior::aggressive_cross:
    case TriggerBehavior::yield_failure:
      return v->v > 0.3;  // any moving participant can cross or fail to yield
    case TriggerBehavior::hard_brake:
    case TriggerBehavior::cut_in_close:
    case TriggerBehavior::late_merge:
    case TriggerBehavior::turn_across:
      return !vru && v->v > 0.5;
  }
  return false;
}

double constant_velocity_ttc(const Scene& scene, int vehicle_id) {
  const VehicleState* v = current_of(scene, vehicle_id);
  if (v == nullptr) {
    return std::numeric_limits<double>::infinity();
  }
  const Track* t = scene.track_by_id(vehicle_id);
  const VehicleState& ego = scene.current_state(scene.ego);
  const Vec2 ego_step = heading_dir(ego.theta) * ego.v;
  const Vec2 veh_step = heading_dir(v->theta) * v->v;
  for (int k = 0; k < scene.t_pred_frames; ++k) {
    const double time = k * scene.dt;
    OrientedBox be = state_box(ego, scene.ego.size);
    be.center += ego_step * time;
    OrientedBox bv = state_box(*v, t->size);
    bv.center += veh_step * time;
    if (boxes_collide(be, bv)) {
      return time;
    }
  }
  return std::numeric_limits<double>::infinity();
}

ConflictEstimate estimate_conflict(const Scene& scene, int vehicle_id) {
  ConflictEstimate out;
  const VehicleState* v = current_of(scene, vehicle_id);
  if (v == nullptr) {
    return out;
  }
  const VehicleState& ego = scene.current_state(scene.ego);
  const double horizon = scene.horizon_seconds();
  const double ego_reach = std::max(ego.v, 0.5) * horizon + 5.0;
  const double veh_reach = std::max(v->v, 0.5) * horizon + 5.0;
  const Vec2 ego_end = ego.pos() + heading_dir(ego.theta) * ego_reach;
  const Vec2 veh_end = v->pos() + heading_dir(v->theta) * veh_reach;
  Vec2 cross_pt;
  if (segment_intersection_point(ego.pos(), ego_end, v->pos(), veh_end, &cross_pt)) {
    out.exists = true;
    out.point = cross_pt;
    out.t_ego = distance(ego.pos(), cross_pt) / std::max(ego.v, 0.1);
    out.t_vehicle = distance(v->pos(), cross_pt) / std::max(v->v, 0.1);
    out.min_dist = 0.0;
    return out;
  }
  // Parallel or diverging paths: same-time closest approach.
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  Vec2 best_mid;
  const Vec2 ego_step = heading_dir(ego.theta) * ego.v;
  const Vec2 veh_step = heading_dir(v->theta) * v->v;
  for (int k = 0; k < scene.t_pred_frames; ++k) {
    const double time = k * scene.dt;
    const Vec2 pe = ego.pos() + ego_step * time;
    const Vec2 pv = v->pos() + veh_step * time;
    const double d = distance(pe, pv);
    if (d < best) {
      best = d;
      best_t = time;
      best_mid = (pe + pv) * 0.5;
    }
  }
  if (best < 10.0) {
    out.exists = true;
    out.point = best_mid;
    out.t_ego = best_t;
    out.t_vehicle = best_t;
    out.min_dist = best;
  }
  return out;
}

double heading_rate_std(const Scene& scene, const Track& track) {
  std::vector<double> rates;
  const int end = scene.t_obs_frames;
  for (int i = 0; i + 1 < end; ++i) {
    if (!track.valid_at(static_cast<size_t>(i)) || !track.valid_at(static_cast<size_t>(i + 1))) {
      continue;
    }
    rates.push_back(wrap_angle(track.states[static_cast<size_t>(i + 1)].theta -
                               track.states[static_cast<size_t>(i)].theta) /
                    scene.dt);
  }
  if (rates.size() < 2) {
    return 0.0;
  }
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= static_cast<double>(rates.size());
  double var = 0.0;
  for (double r : rates) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rates.size());
  return std::sqrt(var);
}

double window_kernel(double t, double t_a, double t_b) {
  const double center = 0.5 * (t_a + t_b);
  const double half = std::max(0.5 * (t_b - t_a), 1e-6);
  return std::max(0.0, 1.0 - std::fabs(t - center) / half);
}

double zone_center_bearing(RelativeZone z) {
  switch (z) {
    case RelativeZone::front: return 0.0;
    case RelativeZone::front_left: return kPi / 4.0;
    case RelativeZone::front_right: return -kPi / 4.0;
    case RelativeZone::crossing_zone: return 0.0;  // conflict forms ahead
    case RelativeZone::rear: return kPi;
    case RelativeZone::merge_zone: return kPi / 6.0;
  }
  return 0.0;
}

}  // namespace advgen
