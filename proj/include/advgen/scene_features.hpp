#pragma once

#include <optional>
#include <string>

#include "advgen/scene.hpp"

namespace advgen {

// Spatial region relative to the ego where a conflict is staged.
enum class RelativeZone { front, front_left, front_right, crossing_zone, rear, merge_zone };

const char* to_string(RelativeZone z);
std::optional<RelativeZone> zone_from_string(const std::string& s);

enum class TriggerBehavior {
  hard_brake,
  late_merge,
  aggressive_cross,
  yield_failure,
  cut_in_close,
  turn_across
};

const char* to_string(TriggerBehavior b);
std::optional<TriggerBehavior> trigger_from_string(const std::string& s);

enum class LaneRelation { same, adjacent, crossing, merging, distant, offroad };
enum class RoadTopology { any, straight, intersection, merge_road };

const char* to_string(RoadTopology t);
std::optional<RoadTopology> topology_from_string(const std::string& s);

// Pose of a vehicle in the ego frame at the decision frame.
struct RelPose {
  double forward = 0.0;
  double left = 0.0;
  double range = 0.0;
  double bearing = 0.0;  // atan2(left, forward)
};

RelPose relative_pose(const Scene& scene, int vehicle_id);

LaneRelation lane_relation(const Scene& scene, int vehicle_id);

// Undirected hop count in the lane graph (successor + neighbor edges);
// -1 when unreachable.
int lane_graph_hops(const MapModel& map, int from_lane, int to_lane);

RoadTopology detect_topology(const MapModel& map);

bool occupies_zone(const Scene& scene, int vehicle_id, RelativeZone zone);

// Whether the vehicle's current motion pattern is consistent with the trigger.
bool trigger_trend_match(const Scene& scene, int vehicle_id, TriggerBehavior trigger);

// Category/kinematics compatibility prior for the trigger.
bool trigger_category_match(const Scene& scene, int vehicle_id, TriggerBehavior trigger);

// Rate of range decrease toward the ego at the decision frame (m/s, positive
// when approaching).
double closing_speed(const Scene& scene, int vehicle_id);

// First box-overlap time under constant-velocity projection of ego and
// vehicle; +inf when the projections never meet within the horizon.
double constant_velocity_ttc(const Scene& scene, int vehicle_id);

struct ConflictEstimate {
  bool exists = false;
  Vec2 point;          // scene frame
  double t_vehicle = 0.0;  // seconds after the decision frame
  double t_ego = 0.0;
  double min_dist = 0.0;
};

// Constant-velocity path-crossing estimate between the vehicle and the ego.
ConflictEstimate estimate_conflict(const Scene& scene, int vehicle_id);

// Standard deviation of the heading rate over the observation window.
double heading_rate_std(const Scene& scene, const Track& track);

// Triangular kernel centered on [t_a, t_b]: 1 at the window center, 0 at and
// beyond the edges.
double window_kernel(double t, double t_a, double t_b);

// Bearing (ego frame) associated with a zone, for graded zone matching.
double zone_center_bearing(RelativeZone z);

}  // namespace advgen
