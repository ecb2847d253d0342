#include "advgen/gates.hpp"

#include <algorithm>
#include <cmath>

namespace advgen {

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::over_speed: return "over_speed";
    case ViolationKind::over_accel: return "over_accel";
    case ViolationKind::over_lat_accel: return "over_lat_accel";
    case ViolationKind::over_jerk: return "over_jerk";
    case ViolationKind::off_road: return "off_road";
    case ViolationKind::red_signal: return "red_signal";
    case ViolationKind::hit_background: return "hit_background";
    case ViolationKind::hit_adversary: return "hit_adversary";
  }
  return "over_speed";
}

namespace {

// Records one violation per contiguous run of exceedances, at the peak.
void record_exceedances(std::vector<Violation>& out, ViolationKind kind,
                        const std::vector<double>& values, double limit) {
  bool in_run = false;
  double peak = 0.0;
  int peak_frame = 0;
  for (size_t k = 0; k < values.size(); ++k) {
    const double mag = std::fabs(values[k]);
    if (mag > limit) {
      if (!in_run || mag > peak) {
        peak = mag;
        peak_frame = static_cast<int>(k);
      }
      in_run = true;
    } else if (in_run) {
      out.push_back({kind, peak_frame, peak});
      in_run = false;
    }
  }
  if (in_run) {
    out.push_back({kind, peak_frame, peak});
  }
}

bool footprint_on_road(const Scene& scene, const VehicleState& s, const BoxSize& size,
                       bool full_footprint) {
  if (scene.map.drivable.empty()) {
    return true;  // no drivable-area annotation: road gate is vacuous
  }
  if (!full_footprint) {
    return scene.map.in_drivable(s.pos());
  }
  for (const Vec2& c : state_box(s, size).corners()) {
    if (!scene.map.in_drivable(c)) {
      return false;
    }
  }
  return true;
}

Vec2 front_bumper(const VehicleState& s, const BoxSize& size) {
  return s.pos() + heading_dir(s.theta) * (size.length * 0.5);
}

}  // namespace

GateReport check_trajectory(const Trajectory& traj, const Scene& scene, const DynLimits& limits,
                            const std::vector<int>& adversary_ids, const BoxSize& size,
                            bool full_footprint) {
  if (static_cast<int>(traj.states.size()) != scene.t_pred_frames) {
    throw std::invalid_argument("check_trajectory: horizon mismatch");
  }
  GateReport report;
  const double dt = scene.dt;
  const size_t n = traj.states.size();

  // road containment
  {
    bool in_run = false;
    for (size_t k = 0; k < n; ++k) {
      if (!footprint_on_road(scene, traj.states[k], size, full_footprint)) {
        report.road_ok = false;
        if (!in_run) {
          report.violations.push_back({ViolationKind::off_road, static_cast<int>(k), 1.0});
          in_run = true;
        }
      } else {
        in_run = false;
      }
    }
  }

  // signal compliance: first front-bumper crossing of each governed stop line
  for (const Signal& sig : scene.map.signals) {
    if (sig.stop_line < 0 || sig.stop_line >= static_cast<int>(scene.map.stop_lines.size())) {
      continue;
    }
    const StopLine& line = scene.map.stop_lines[static_cast<size_t>(sig.stop_line)];
    for (size_t k = 0; k + 1 < n; ++k) {
      const Vec2 a = front_bumper(traj.states[k], size);
      const Vec2 b = front_bumper(traj.states[k + 1], size);
      if (!segments_intersect(a, b, line.p1, line.p2)) {
        continue;
      }
      const auto lane = assign_lane(scene.map, traj.states[k].pos());
      if (lane && *lane == line.lane_id) {
        // crossing time measured at scenario clock (decision frame offset)
        const double t = (scene.decision_frame() + static_cast<int>(k) + 1) * dt;
        if (sig.state_at(t) == SignalState::red) {
          report.signal_ok = false;
          report.violations.push_back({ViolationKind::red_signal, static_cast<int>(k) + 1, 1.0});
        }
      }
      break;  // only the first crossing of this line matters
    }
  }

  // dynamic limits from finite differences of positions/headings
  {
    std::vector<double> speed(n > 1 ? n - 1 : 0);
    for (size_t k = 0; k + 1 < n; ++k) {
      speed[k] = distance(traj.states[k].pos(), traj.states[k + 1].pos()) / dt;
    }
    std::vector<double> accel(speed.size() > 1 ? speed.size() - 1 : 0);
    for (size_t k = 0; k + 1 < speed.size(); ++k) {
      accel[k] = (speed[k + 1] - speed[k]) / dt;
    }
    std::vector<double> jerk(accel.size() > 1 ? accel.size() - 1 : 0);
    for (size_t k = 0; k + 1 < accel.size(); ++k) {
      jerk[k] = (accel[k + 1] - accel[k]) / dt;
    }
    std::vector<double> lat(n > 1 ? n - 1 : 0);
    for (size_t k = 0; k + 1 < n; ++k) {
      const double dtheta = wrap_angle(traj.states[k + 1].theta - traj.states[k].theta);
      lat[k] = speed[k] * dtheta / dt;  // v^2 * curvature
    }
    const size_t before = report.violations.size();
    record_exceedances(report.violations, ViolationKind::over_speed, speed, limits.v_max);
    record_exceedances(report.violations, ViolationKind::over_accel, accel, limits.a_long_max);
    record_exceedances(report.violations, ViolationKind::over_lat_accel, lat, limits.a_lat_max);
    record_exceedances(report.violations, ViolationKind::over_jerk, jerk, limits.jerk_max);
    report.dyn_ok = report.violations.size() == before;
  }

  // interaction safety versus logged background tracks
  const int base_frame = scene.decision_frame();
  for (const Track& other : scene.others) {
    if (other.vehicle_id == traj.vehicle_id ||
        std::find(adversary_ids.begin(), adversary_ids.end(), other.vehicle_id) !=
            adversary_ids.end()) {
      continue;
    }
    for (size_t k = 0; k < n; ++k) {
      const size_t f = static_cast<size_t>(base_frame) + k;
      if (!other.valid_at(f)) {
        continue;
      }
      if (boxes_collide(state_box(traj.states[k], size), state_box(other.states[f], other.size))) {
        report.int_ok = false;
        report.violations.push_back(
            {ViolationKind::hit_background, static_cast<int>(k),
             static_cast<double>(other.vehicle_id)});
        break;  // one event per background vehicle
      }
    }
  }
  return report;
}

ScenarioGateReport check_scenario(const std::vector<Trajectory>& adversaries, const Scene& scene,
                                  const DynLimits& limits, bool full_footprint) {
  ScenarioGateReport out;
  std::vector<int> ids;
  ids.reserve(adversaries.size());
  for (const Trajectory& t : adversaries) {
    ids.push_back(t.vehicle_id);
  }
  for (const Trajectory& t : adversaries) {
    const Track* track = scene.track_by_id(t.vehicle_id);
    const BoxSize size = track != nullptr ? track->size : BoxSize{};
    out.per_vehicle.push_back({t.vehicle_id, check_trajectory(t, scene, limits, ids, size,
                                                              full_footprint)});
  }
  // adversary-adversary overlap
  for (size_t i = 0; i < adversaries.size(); ++i) {
    for (size_t j = i + 1; j < adversaries.size(); ++j) {
      const Track* ti = scene.track_by_id(adversaries[i].vehicle_id);
      const Track* tj = scene.track_by_id(adversaries[j].vehicle_id);
      const BoxSize si = ti != nullptr ? ti->size : BoxSize{};
      const BoxSize sj = tj != nullptr ? tj->size : BoxSize{};
      const size_t frames = std::min(adversaries[i].states.size(), adversaries[j].states.size());
      for (size_t k = 0; k < frames; ++k) {
        if (boxes_collide(state_box(adversaries[i].states[k], si),
                          state_box(adversaries[j].states[k], sj))) {
          GateReport& ri = out.per_vehicle[i].second;
          GateReport& rj = out.per_vehicle[j].second;
          ri.int_ok = false;
          rj.int_ok = false;
          ri.violations.push_back({ViolationKind::hit_adversary, static_cast<int>(k),
                                   static_cast<double>(adversaries[j].vehicle_id)});
          rj.violations.push_back({ViolationKind::hit_adversary, static_cast<int>(k),
                                   static_cast<double>(adversaries[i].vehicle_id)});
          break;  // one event per pair
        }
      }
    }
  }
  for (const auto& [id, r] : out.per_vehicle) {
    (void)id;
    out.overall = out.overall && r.overall();
  }
  return out;
}

AttributionReport check_attribution(const Trajectory& executed_ego, const BoxSize& ego_size,
                                    const std::vector<Trajectory>& adversaries, const Scene& scene,
                                    int primary_id, const std::vector<int>& support_ids) {
  AttributionReport out;
  for (const Trajectory& adv : adversaries) {
    const Track* track = scene.track_by_id(adv.vehicle_id);
    const BoxSize size = track != nullptr ? track->size : BoxSize{};
    const size_t frames = std::min(executed_ego.states.size(), adv.states.size());
    for (size_t k = 0; k < frames; ++k) {
      if (boxes_collide(state_box(executed_ego.states[k], ego_size),
                        state_box(adv.states[k], size))) {
        out.collider_ids.push_back(adv.vehicle_id);
        break;
      }
    }
  }
  std::sort(out.collider_ids.begin(), out.collider_ids.end());
  out.multi_violation = out.collider_ids.size() > 1;
  for (int id : out.collider_ids) {
    if (std::find(support_ids.begin(), support_ids.end(), id) != support_ids.end()) {
      out.support_violation = true;
    }
  }
  out.primary_only = out.collider_ids.empty() ||
                     (out.collider_ids.size() == 1 && out.collider_ids.front() == primary_id);
  return out;
}

double kinematic_penalty(const GateReport& report, const DynLimits& limits) {
  double sum = 0.0;
  for (const Violation& v : report.violations) {
    double limit = 0.0;
    switch (v.kind) {
      case ViolationKind::over_speed: limit = limits.v_max; break;
      case ViolationKind::over_accel: limit = limits.a_long_max; break;
      case ViolationKind::over_lat_accel: limit = limits.a_lat_max; break;
      case ViolationKind::over_jerk: limit = limits.jerk_max; break;
      default: continue;
    }
    if (limit > 0.0) {
      sum += std::max(0.0, v.magnitude / limit - 1.0);
    }
  }
  return sum;
}

int cross_line_events(const Trajectory& traj, const Scene& scene) {
  if (scene.map.drivable.empty()) {
    return 0;
  }
  int events = 0;
  bool was_on = true;
  for (size_t k = 0; k < traj.states.size(); ++k) {
    const bool on = scene.map.in_drivable(traj.states[k].pos());
    if (was_on && !on) {
      ++events;
    }
    was_on = on;
  }
  return events;
}

}  // namespace advgen
