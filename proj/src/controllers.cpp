#include "advgen/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace advgen {

const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::replay: return "replay";
    case ControllerKind::idm: return "idm";
    case ControllerKind::cruise: return "cruise";
    case ControllerKind::expert: return "expert";
  }
  return "replay";
}

std::optional<ControllerKind> controller_from_string(const std::string& s) {
  if (s == "replay") return ControllerKind::replay;
  if (s == "idm") return ControllerKind::idm;
  if (s == "cruise") return ControllerKind::cruise;
  if (s == "expert") return ControllerKind::expert;
  return std::nullopt;
}

namespace {

constexpr double kCorridorHalf = 2.0;  // lateral half width of the attention corridor

struct Leader {
  bool found = false;
  double gap = 0.0;      // bumper to bumper
  double closing = 0.0;  // positive when approaching
  double speed = 0.0;
};

Leader nearest_leader(const VehicleState& ego, const BoxSize& ego_size,
                      const std::vector<ObservedVehicle>& others, double lateral_half) {
  Leader best;
  double best_forward = std::numeric_limits<double>::infinity();
  for (const ObservedVehicle& o : others) {
    const Vec2 local = rotate(o.pos - ego.pos(), -ego.theta);
    if (local.x <= 0.0 || std::fabs(local.y) > lateral_half) {
      continue;
    }
    if (local.x < best_forward) {
      best_forward = local.x;
      best.found = true;
      best.gap = std::max(0.1, local.x - 0.5 * (ego_size.length + o.size.length));
      const double v_along = o.v * std::cos(o.theta - ego.theta);
      best.closing = ego.v - v_along;
      best.speed = v_along;
    }
  }
  return best;
}

double min_corridor_ttc(const VehicleState& ego, const BoxSize& ego_size,
                        const std::vector<ObservedVehicle>& others) {
  double best = std::numeric_limits<double>::infinity();
  for (const ObservedVehicle& o : others) {
    const Vec2 local = rotate(o.pos - ego.pos(), -ego.theta);
    if (local.x <= 0.0 || std::fabs(local.y) > kCorridorHalf) {
      continue;
    }
    const double gap = std::max(0.0, local.x - 0.5 * (ego_size.length + o.size.length));
    const double closing = ego.v - o.v * std::cos(o.theta - ego.theta);
    if (closing > 0.1) {
      best = std::min(best, gap / closing);
    }
  }
  return best;
}

double pure_pursuit_curvature(const VehicleState& ego, const Polyline& path, double lookahead,
                              double lateral_aim) {
  if (path.empty()) {
    return 0.0;
  }
  const PathProjection proj = path.project(ego.pos());
  const double s_target = proj.s + std::max(lookahead, 1.0);
  Vec2 target = path.point_at(s_target);
  if (lateral_aim != 0.0) {
    const double h = path.heading_at(s_target);
    target += Vec2{-std::sin(h), std::cos(h)} * lateral_aim;
  }
  const Vec2 local = rotate(target - ego.pos(), -ego.theta);
  const double d2 = std::max(norm_sq(local), 1e-6);
  return 2.0 * local.y / d2;
}

// Minimum predicted clearance to any observed vehicle over the next horizon
// under constant velocities, plus the lateral side the threat comes from.
struct ThreatPrediction {
  double min_gap = std::numeric_limits<double>::infinity();
  double threat_side = 0.0;  // >0: threat on the left
};

ThreatPrediction predict_threat(const VehicleState& ego, const BoxSize& ego_size,
                                const std::vector<ObservedVehicle>& others, double horizon,
                                double dt) {
  ThreatPrediction out;
  for (const ObservedVehicle& o : others) {
    for (double t = 0.0; t <= horizon; t += dt) {
      const Vec2 pe = ego.pos() + heading_dir(ego.theta) * (ego.v * t);
      const Vec2 po = o.pos + heading_dir(o.theta) * (o.v * t);
      const double gap = distance(pe, po) - 0.5 * (ego_size.length + o.size.length);
      if (gap < out.min_gap) {
        out.min_gap = gap;
        out.threat_side = rotate(po - pe, -ego.theta).y;
      }
    }
  }
  return out;
}

bool corridor_free(const VehicleState& ego, const std::vector<ObservedVehicle>& others,
                   double side) {
  for (const ObservedVehicle& o : others) {
    const Vec2 local = rotate(o.pos - ego.pos(), -ego.theta);
    if (local.x > -8.0 && local.x < 25.0 && local.y * side > 0.5 && std::fabs(local.y) < 5.5) {
      return false;
    }
  }
  return true;
}

}  // namespace

double idm_acceleration(const IdmParams& p, double v, double v0, double gap, double closing) {
  const double v0_eff = std::max(v0, 0.1);
  double a = p.a_max * (1.0 - std::pow(v / v0_eff, 4.0));
  if (gap > 0.0) {
    const double s_star = p.s0 + v * p.headway + v * closing / (2.0 * std::sqrt(p.a_max * p.b));
    a = p.a_max * (1.0 - std::pow(v / v0_eff, 4.0) - std::pow(s_star / gap, 2.0));
  }
  return a;
}

ControlAction step_controller(const ControllerSpec& spec, const VehicleState& ego,
                              const BoxSize& ego_size, const std::vector<ObservedVehicle>& others,
                              const ControlContext& ctx) {
  ControlAction action;
  const Polyline* path = ctx.reference_path;
  const double lookahead_v = std::max(3.0, 0.8 * ego.v);
  switch (spec.kind) {
    case ControllerKind::replay:
      break;  // rollout copies the logged trajectory
    case ControllerKind::idm: {
      const Leader leader = nearest_leader(ego, ego_size, others, kCorridorHalf);
      action.a_long = leader.found
                          ? idm_acceleration(spec.idm, ego.v, ctx.desired_speed, leader.gap,
                                             leader.closing)
                          : idm_acceleration(spec.idm, ego.v, ctx.desired_speed, -1.0, 0.0);
      if (path != nullptr) {
        action.curvature = pure_pursuit_curvature(ego, *path, lookahead_v, 0.0);
      }
      break;
    }
    case ControllerKind::cruise: {
      const double ttc = min_corridor_ttc(ego, ego_size, others);
      if (ttc < spec.cruise.ttc_brake) {
        action.a_long = -spec.cruise.brake_decel;
      } else {
        action.a_long = std::clamp(0.8 * (ctx.desired_speed - ego.v), -1.5, 1.5);
      }
      if (path != nullptr) {
        action.curvature = pure_pursuit_curvature(ego, *path, lookahead_v, 0.0);
      }
      break;
    }
    case ControllerKind::expert: {
      const double lookahead = std::max(3.0, spec.expert.lookahead_gain * ego.v);
      const ThreatPrediction threat = predict_threat(ego, ego_size, others, 2.0, ctx.dt * 2.0);
      double lateral_aim = 0.0;
      action.a_long = std::clamp(0.8 * (ctx.desired_speed - ego.v), -1.5, 1.5);
      if (threat.min_gap < spec.expert.evade_gap) {
        const double escape = threat.threat_side > 0.0 ? -1.0 : 1.0;  // move away
        if (corridor_free(ego, others, escape)) {
          lateral_aim = escape * spec.expert.evade_offset;
        } else {
          action.a_long = -spec.expert.brake_decel;
        }
      }
      if (path != nullptr) {
        action.curvature = pure_pursuit_curvature(ego, *path, lookahead, lateral_aim);
      }
      break;
    }
  }
  if (ctx.limits != nullptr) {
    action.a_long = std::clamp(action.a_long, -ctx.limits->a_long_max, ctx.limits->a_long_max);
    const double v2 = std::max(ego.v * ego.v, 1.0);
    const double kappa_limit = ctx.limits->a_lat_max / v2;
    action.curvature = std::clamp(action.curvature, -kappa_limit, kappa_limit);
  }
  return action;
}

}  // namespace advgen
