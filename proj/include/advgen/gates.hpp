#pragma once

#include <string>
#include <vector>

#include "advgen/scene.hpp"

namespace advgen {

struct DynLimits {
  double v_max = 30.0;       // m/s
  double a_long_max = 8.0;   // m/s^2
  double a_lat_max = 5.0;    // m/s^2
  double jerk_max = 15.0;    // m/s^3
};

enum class ViolationKind {
  over_speed,
  over_accel,
  over_lat_accel,
  over_jerk,
  off_road,
  red_signal,
  hit_background,
  hit_adversary
};

const char* to_string(ViolationKind k);

// One entry per contiguous exceedance run (peak frame and magnitude) or per
// discrete event.
struct Violation {
  ViolationKind kind;
  int frame = 0;
  double magnitude = 0.0;
};

struct GateReport {
  bool road_ok = true;
  bool signal_ok = true;
  bool dyn_ok = true;
  bool int_ok = true;
  std::vector<Violation> violations;

  bool overall() const { return road_ok && signal_ok && dyn_ok && int_ok; }
};

// Which gate families filter candidates. Reports always measure everything;
// the toggles only decide what counts as a rejection (ablation surface).
struct GateToggles {
  bool rule = true;      // road + signal + interaction
  bool physical = true;  // dynamic limits

  bool passes(const GateReport& r) const {
    return (!rule || (r.road_ok && r.signal_ok && r.int_ok)) && (!physical || r.dyn_ok);
  }
};

// Trajectory-level gate: road containment, signal compliance at stop-line
// crossings, finite-difference dynamic limits, and no overlap with any
// background (non-adversary, non-ego) logged track.
GateReport check_trajectory(const Trajectory& traj, const Scene& scene, const DynLimits& limits,
                            const std::vector<int>& adversary_ids, const BoxSize& size,
                            bool full_footprint = false);

struct ScenarioGateReport {
  std::vector<std::pair<int, GateReport>> per_vehicle;
  bool overall = true;

  const GateReport* for_vehicle(int id) const {
    for (const auto& [vid, r] : per_vehicle) {
      if (vid == id) {
        return &r;
      }
    }
    return nullptr;
  }
};

// Conjunction over adversary trajectories; additionally flags
// adversary-adversary overlap as an interaction violation on both reports.
// Empty adversary set passes vacuously.
ScenarioGateReport check_scenario(const std::vector<Trajectory>& adversaries, const Scene& scene,
                                  const DynLimits& limits, bool full_footprint = false);

struct AttributionReport {
  std::vector<int> collider_ids;  // adversaries that touched the ego
  bool primary_only = true;
  bool support_violation = false;
  bool multi_violation = false;
};

AttributionReport check_attribution(const Trajectory& executed_ego, const BoxSize& ego_size,
                                    const std::vector<Trajectory>& adversaries, const Scene& scene,
                                    int primary_id, const std::vector<int>& support_ids);

// Sum over dynamic violations of (magnitude/limit - 1).
double kinematic_penalty(const GateReport& report, const DynLimits& limits);

// Count of on-road -> off-road transitions of the footprint center.
int cross_line_events(const Trajectory& traj, const Scene& scene);

}  // namespace advgen
