#include "advgen/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "advgen/rng.hpp"

namespace advgen {

namespace {

constexpr double kSpeedProfiles[] = {0.0, -2.0, -6.0, 2.0};  // neutral first
constexpr double kLateralOffsets[] = {0.0, -1.0, 1.0};
constexpr double kLatticeVMax = 30.0;

struct TargetPath {
  Polyline path;
  int lane_id = -1;
  bool is_own = false;
  bool crosses_ego = false;
  bool is_left = false;
  bool is_right = false;
  double heading_change = 0.0;  // along the sampled stretch
};

Polyline offset_polyline(const Polyline& base, double offset) {
  if (offset == 0.0 || base.empty()) {
    return base;
  }
  std::vector<Vec2> out;
  const auto& pts = base.points();
  out.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const size_t a = i == 0 ? 0 : i - 1;
    const size_t b = i + 1 < pts.size() ? i + 1 : i;
    const Vec2 d = pts[b] - pts[a];
    const double h = std::atan2(d.y, d.x);
    out.push_back(pts[i] + Vec2{-std::sin(h), std::cos(h)} * offset);
  }
  return Polyline(std::move(out));
}

// Stretch of a lane centerline starting at the projection of `from`.
Polyline lane_stretch(const Lane& lane, const Vec2& from, double reach) {
  const Polyline full(lane.centerline);
  const double s0 = full.project(from).s;
  std::vector<Vec2> pts;
  const double step = 2.0;
  for (double s = s0; s <= std::min(full.length(), s0 + reach) + 1e-9; s += step) {
    pts.push_back(full.point_at(s));
  }
  if (pts.size() < 2) {
    pts.push_back(full.point_at(full.length()));
  }
  if (pts.size() < 2) {
    return Polyline();
  }
  // extend past the lane end so pure pursuit never runs out of path
  const Vec2 tail_dir = pts.back() - pts[pts.size() - 2];
  const double tail_len = std::max(norm(tail_dir), 1e-6);
  pts.push_back(pts.back() + tail_dir * (60.0 / tail_len));
  return Polyline(std::move(pts));
}

double polyline_heading_change(const Polyline& p) {
  if (p.empty()) {
    return 0.0;
  }
  return std::fabs(wrap_angle(p.heading_at(p.length() * 0.9) - p.heading_at(0.0)));
}

std::vector<TargetPath> collect_targets(const Scene& scene, const Track& track,
                                        const GenerationGuidance* guidance) {
  const VehicleState& cur = scene.current_state(track);
  const double horizon = scene.horizon_seconds();
  const double reach = std::max(cur.v, 2.0) * horizon + 0.5 * 2.0 * horizon * horizon + 20.0;

  std::set<int> lane_ids;
  const auto own = assign_lane(scene.map, cur.pos());
  std::vector<std::pair<int, bool>> ordered;  // (lane id, is_own)
  if (own) {
    ordered.push_back({*own, true});
    const Lane* l = scene.map.lane_by_id(*own);
    if (l != nullptr) {
      if (l->left >= 0) ordered.push_back({l->left, false});
      if (l->right >= 0) ordered.push_back({l->right, false});
      for (int s : l->successors) {
        ordered.push_back({s, false});
        const Lane* ls = scene.map.lane_by_id(s);
        if (ls != nullptr) {
          for (int s2 : ls->successors) {
            ordered.push_back({s2, false});
          }
        }
      }
      if (l->left >= 0) {
        const Lane* ll = scene.map.lane_by_id(l->left);
        if (ll != nullptr) {
          for (int s : ll->successors) ordered.push_back({s, false});
        }
      }
      if (l->right >= 0) {
        const Lane* lr = scene.map.lane_by_id(l->right);
        if (lr != nullptr) {
          for (int s : lr->successors) ordered.push_back({s, false});
        }
      }
    }
  }
  // crossing lanes through the conflict region
  if (guidance != nullptr) {
    const VehicleState& ego = scene.current_state(scene.ego);
    const double t_c = 0.5 * (guidance->window_start + guidance->window_end);
    const Vec2 conflict = ego.pos() + heading_dir(ego.theta) * (ego.v * t_c);
    for (const Lane& l : scene.map.lanes) {
      if (l.centerline.size() < 2) {
        continue;
      }
      const Polyline pl(l.centerline);
      if (pl.distance_to(conflict) <= 8.0 && pl.distance_to(cur.pos()) <= reach) {
        ordered.push_back({l.id, false});
      }
    }
  }

  const VehicleState& ego = scene.current_state(scene.ego);
  const Vec2 ego_end = ego.pos() + heading_dir(ego.theta) * (std::max(ego.v, 1.0) * horizon + 10.0);

  std::vector<TargetPath> out;
  const Lane* own_lane = own ? scene.map.lane_by_id(*own) : nullptr;
  for (const auto& [id, is_own] : ordered) {
    if (!lane_ids.insert(id).second) {
      continue;
    }
    const Lane* lane = scene.map.lane_by_id(id);
    if (lane == nullptr || lane->centerline.size() < 2) {
      continue;
    }
    TargetPath tp;
    tp.path = lane_stretch(*lane, cur.pos(), reach);
    if (tp.path.empty()) {
      continue;
    }
    tp.lane_id = id;
    tp.is_own = is_own;
    tp.is_left = own_lane != nullptr && own_lane->left == id;
    tp.is_right = own_lane != nullptr && own_lane->right == id;
    tp.heading_change = polyline_heading_change(tp.path);
    // does this target cross the ego's projected path?
    const auto& pts = tp.path.points();
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      if (segments_intersect(pts[i], pts[i + 1], ego.pos(), ego_end)) {
        const Vec2 d = pts[i + 1] - pts[i];
        const double ang = std::fabs(wrap_angle(std::atan2(d.y, d.x) - ego.theta));
        if (ang > kPi / 6.0 && ang < 5.0 * kPi / 6.0) {
          tp.crosses_ego = true;
        }
        break;
      }
    }
    out.push_back(std::move(tp));
  }
  return out;
}

Trajectory pursuit_rollout(const Scene& scene, const Track& track, const Polyline& path,
                           double accel, double kappa_max) {
  const VehicleState& cur = scene.current_state(track);
  Trajectory traj;
  traj.vehicle_id = track.vehicle_id;
  traj.states.resize(static_cast<size_t>(scene.t_pred_frames));
  VehicleState s = cur;
  s.a = accel;
  traj.states[0] = s;
  const double dt = scene.dt;
  for (int k = 1; k < scene.t_pred_frames; ++k) {
    const double v_next = std::clamp(s.v + accel * dt, 0.0, kLatticeVMax);
    const double v_avg = 0.5 * (s.v + v_next);
    double kappa = 0.0;
    if (!path.empty() && v_avg > 1e-3) {
      const double ld = std::max(3.0, 0.8 * s.v);
      const PathProjection proj = path.project(s.pos());
      const Vec2 target = path.point_at(proj.s + ld);
      const Vec2 local = rotate(target - s.pos(), -s.theta);
      const double dist = std::max(norm(local), 1e-6);
      kappa = std::clamp(2.0 * local.y / (dist * dist), -kappa_max, kappa_max);
    }
    const double dtheta = v_avg * kappa * dt;
    const double theta_next = wrap_angle(s.theta + dtheta);
    const Vec2 step = heading_dir(wrap_angle(s.theta + 0.5 * dtheta)) * (v_avg * dt);
    s.x += step.x;
    s.y += step.y;
    s.theta = theta_next;
    s.v = v_next;
    s.a = accel;
    traj.states[static_cast<size_t>(k)] = s;
  }
  return traj;
}

Trajectory constant_velocity_rollout(const Scene& scene, const Track& track) {
  const VehicleState& cur = scene.current_state(track);
  Trajectory traj;
  traj.vehicle_id = track.vehicle_id;
  traj.states.resize(static_cast<size_t>(scene.t_pred_frames));
  VehicleState s = cur;
  s.a = 0.0;
  const Vec2 step = heading_dir(s.theta) * (s.v * scene.dt);
  for (int k = 0; k < scene.t_pred_frames; ++k) {
    traj.states[static_cast<size_t>(k)] = s;
    s.x += step.x;
    s.y += step.y;
  }
  return traj;
}

Trajectory full_stop_rollout(const Scene& scene, const Track& track) {
  const VehicleState& cur = scene.current_state(track);
  Trajectory traj;
  traj.vehicle_id = track.vehicle_id;
  traj.states.resize(static_cast<size_t>(scene.t_pred_frames));
  VehicleState s = cur;
  const double brake = -3.0;
  s.a = s.v > 0.0 ? brake : 0.0;
  traj.states[0] = s;
  for (int k = 1; k < scene.t_pred_frames; ++k) {
    const double v_next = std::max(0.0, s.v + brake * scene.dt);
    const double v_avg = 0.5 * (s.v + v_next);
    const Vec2 step = heading_dir(s.theta) * (v_avg * scene.dt);
    s.x += step.x;
    s.y += step.y;
    s.v = v_next;
    s.a = v_next > 0.0 ? brake : 0.0;
    traj.states[static_cast<size_t>(k)] = s;
  }
  return traj;
}

Maneuver tag_for(const TargetPath& tp, double profile, const Trajectory& traj) {
  if (tp.crosses_ego) {
    return Maneuver::cross;
  }
  if (tp.is_left) {
    return Maneuver::lane_change_left;
  }
  if (tp.is_right) {
    return Maneuver::lane_change_right;
  }
  if (traj.states.back().v <= 0.05 && profile < 0.0) {
    return Maneuver::stop;
  }
  if (profile <= -2.0) {
    return Maneuver::brake;
  }
  if (profile > 0.0) {
    return Maneuver::accelerate;
  }
  if (tp.heading_change > kPi / 6.0) {
    return Maneuver::turn;
  }
  return Maneuver::keep_lane;
}

double terminal_pose_distance(const Candidate& a, const Candidate& b) {
  const VehicleState& sa = a.traj.states.back();
  const VehicleState& sb = b.traj.states.back();
  return distance(sa.pos(), sb.pos()) + 5.0 * std::fabs(wrap_angle(sa.theta - sb.theta));
}

}  // namespace

double max_curvature(const Scene& scene, int vehicle_id) {
  const Track* t = scene.track_by_id(vehicle_id);
  const double length = t != nullptr ? t->size.length : 4.5;
  const double wheelbase = 0.6 * length;
  return std::tan(0.6) / std::max(wheelbase, 0.5);
}

const char* to_string(Maneuver m) {
  switch (m) {
    case Maneuver::keep_lane: return "keep_lane";
    case Maneuver::lane_change_left: return "lane_change_left";
    case Maneuver::lane_change_right: return "lane_change_right";
    case Maneuver::brake: return "brake";
    case Maneuver::accelerate: return "accelerate";
    case Maneuver::cross: return "cross";
    case Maneuver::turn: return "turn";
    case Maneuver::stop: return "stop";
  }
  return "keep_lane";
}

CandidateSet generate_candidates(const Scene& scene, int vehicle_id, int m, uint64_t seed,
                                 const GenerationGuidance* guidance) {
  const Track* track = scene.track_by_id(vehicle_id);
  if (track == nullptr || !track->valid_at(static_cast<size_t>(scene.decision_frame()))) {
    throw std::invalid_argument("generate_candidates: vehicle " + std::to_string(vehicle_id) +
                                " not valid at the decision frame");
  }
  m = std::max(1, m);
  CandidateSet out;
  out.vehicle_id = vehicle_id;

  const bool vru = track->category == VehicleCategory::pedestrian ||
                   track->category == VehicleCategory::cyclist;
  const VehicleState& cur = scene.current_state(*track);
  std::optional<int> lane;
  if (!scene.map.lanes.empty()) {
    lane = assign_lane(scene.map, cur.pos());
  }
  if (vru || !lane) {
    Candidate cv{constant_velocity_rollout(scene, *track), Maneuver::keep_lane};
    Candidate st{full_stop_rollout(scene, *track), Maneuver::stop};
    out.candidates.push_back(std::move(cv));
    if (m > 1) {
      out.candidates.push_back(std::move(st));
    }
    return out;
  }

  const double kappa_max = max_curvature(scene, vehicle_id);
  const auto targets = collect_targets(scene, *track, guidance);
  std::vector<Candidate> raw;
  for (const TargetPath& tp : targets) {
    for (double profile : kSpeedProfiles) {
      for (double offset : kLateralOffsets) {
        const Polyline ref = offset_polyline(tp.path, offset);
        Candidate c;
        c.traj = pursuit_rollout(scene, *track, ref, profile, kappa_max);
        c.tag = tag_for(tp, profile, c.traj);
        raw.push_back(std::move(c));
      }
    }
  }
  if (raw.empty()) {
    out.candidates.push_back({constant_velocity_rollout(scene, *track), Maneuver::keep_lane});
    if (m > 1) {
      out.candidates.push_back({full_stop_rollout(scene, *track), Maneuver::stop});
    }
    return out;
  }

  // Farthest-point pruning on the terminal pose, seeded with the neutral
  // candidate (own lane, hold, no offset = raw[0] by construction).
  SplitMix64 rng(seed);
  std::vector<double> jitter(raw.size());
  for (double& x : jitter) {
    x = rng.uniform() * 1e-6;
  }
  std::vector<size_t> selected{0};
  std::vector<char> taken(raw.size(), 0);
  taken[0] = 1;
  while (static_cast<int>(selected.size()) < m &&
         selected.size() < raw.size()) {
    double best_d = -1.0;
    size_t best_i = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
      if (taken[i]) {
        continue;
      }
      double dmin = std::numeric_limits<double>::infinity();
      for (size_t s : selected) {
        dmin = std::min(dmin, terminal_pose_distance(raw[i], raw[s]));
      }
      dmin += jitter[i];
      if (dmin > best_d) {
        best_d = dmin;
        best_i = i;
      }
    }
    taken[best_i] = 1;
    selected.push_back(best_i);
  }
  for (size_t i : selected) {
    out.candidates.push_back(std::move(raw[i]));
  }
  return out;
}

double trajectory_naturalness(const Trajectory& traj, double dt, double jerk_cap) {
  const size_t n = traj.states.size();
  if (n < 3) {
    return 1.0;
  }
  std::vector<double> accel(n - 1);
  for (size_t k = 0; k + 1 < n; ++k) {
    accel[k] = (traj.states[k + 1].v - traj.states[k].v) / dt;
  }
  double sum = 0.0;
  size_t count = 0;
  for (size_t k = 0; k + 1 < accel.size(); ++k) {
    sum += std::fabs(accel[k + 1] - accel[k]) / dt;
    ++count;
  }
  if (count == 0) {
    return 1.0;
  }
  return 1.0 - std::min(1.0, (sum / static_cast<double>(count)) / jerk_cap);
}

double corridor_overlap_fraction(const Trajectory& traj, const Trajectory& reference,
                                 double margin) {
  if (traj.states.empty() || reference.states.size() < 2) {
    return 0.0;
  }
  std::vector<Vec2> ref_pts;
  ref_pts.reserve(reference.states.size());
  for (const VehicleState& s : reference.states) {
    ref_pts.push_back(s.pos());
  }
  const Polyline ref_path(std::move(ref_pts));
  size_t overlapping = 0;
  for (const VehicleState& s : traj.states) {
    if (ref_path.distance_to(s.pos()) <= margin) {
      ++overlapping;
    }
  }
  return static_cast<double>(overlapping) / static_cast<double>(traj.states.size());
}

namespace {

struct Approach {
  double d_min = std::numeric_limits<double>::infinity();
  int frame = 0;
};

Approach closest_approach(const Trajectory& a, const Trajectory& b, const BoxSize& sa,
                          const BoxSize& sb) {
  Approach out;
  const size_t n = std::min(a.states.size(), b.states.size());
  for (size_t k = 0; k < n; ++k) {
    const double d = box_clearance(state_box(a.states[k], sa), state_box(b.states[k], sb));
    if (d < out.d_min) {
      out.d_min = d;
      out.frame = static_cast<int>(k);
      if (d <= 0.0) {
        break;
      }
    }
  }
  return out;
}

double mode_tag_score(CollisionMode mode, Maneuver tag) {
  switch (mode) {
    case CollisionMode::rear_end:
      if (tag == Maneuver::brake) return 1.0;
      if (tag == Maneuver::stop) return 0.9;
      if (tag == Maneuver::keep_lane) return 0.6;
      if (tag == Maneuver::accelerate) return 0.3;
      return 0.1;
    case CollisionMode::crossing:
      if (tag == Maneuver::cross) return 1.0;
      if (tag == Maneuver::turn) return 0.5;
      if (tag == Maneuver::keep_lane || tag == Maneuver::accelerate) return 0.3;
      return 0.1;
    case CollisionMode::cut_in:
      if (tag == Maneuver::lane_change_left || tag == Maneuver::lane_change_right) return 1.0;
      if (tag == Maneuver::accelerate) return 0.5;
      if (tag == Maneuver::keep_lane) return 0.3;
      return 0.1;
    case CollisionMode::merge:
      if (tag == Maneuver::lane_change_left || tag == Maneuver::lane_change_right) return 1.0;
      if (tag == Maneuver::accelerate) return 0.5;
      if (tag == Maneuver::keep_lane || tag == Maneuver::cross) return 0.4;
      return 0.1;
    case CollisionMode::head_on:
      if (tag == Maneuver::keep_lane) return 1.0;
      if (tag == Maneuver::accelerate) return 0.8;
      if (tag == Maneuver::cross) return 0.3;
      return 0.1;
    case CollisionMode::turning:
      if (tag == Maneuver::turn) return 1.0;
      if (tag == Maneuver::cross) return 0.7;
      return 0.2;
    case CollisionMode::vru:
      if (tag == Maneuver::cross) return 1.0;
      if (tag == Maneuver::keep_lane) return 0.5;
      return 0.2;
  }
  return 0.1;
}

bool trigger_prefers_tag(TriggerBehavior trigger, Maneuver tag) {
  switch (trigger) {
    case TriggerBehavior::hard_brake:
      return tag == Maneuver::brake || tag == Maneuver::stop;
    case TriggerBehavior::late_merge:
    case TriggerBehavior::cut_in_close:
      return tag == Maneuver::lane_change_left || tag == Maneuver::lane_change_right;
    case TriggerBehavior::aggressive_cross:
      return tag == Maneuver::cross;
    case TriggerBehavior::yield_failure:
      return tag == Maneuver::cross || tag == Maneuver::keep_lane;
    case TriggerBehavior::turn_across:
      return tag == Maneuver::turn || tag == Maneuver::cross;
  }
  return false;
}

// Zone membership for a candidate state relative to an ego state.
double zone_match_score(const VehicleState& ego, const VehicleState& cand, RelativeZone zone) {
  const Vec2 local = rotate(cand.pos() - ego.pos(), -ego.theta);
  const double bearing = std::atan2(local.y, local.x);
  bool in_zone = false;
  switch (zone) {
    case RelativeZone::front:
      in_zone = local.x > 0.0 && local.x <= 50.0 && std::fabs(local.y) <= 2.0;
      break;
    case RelativeZone::front_left:
      in_zone = local.x > 0.0 && local.x <= 50.0 && local.y > 2.0 && local.y <= 6.0;
      break;
    case RelativeZone::front_right:
      in_zone = local.x > 0.0 && local.x <= 50.0 && local.y < -2.0 && local.y >= -6.0;
      break;
    case RelativeZone::rear:
      in_zone = local.x < 0.0 && local.x >= -50.0 && std::fabs(local.y) <= 2.0;
      break;
    case RelativeZone::crossing_zone: {
      const double ang = std::fabs(wrap_angle(cand.theta - ego.theta));
      in_zone = local.x > -2.0 && ang > kPi / 6.0 && ang < 5.0 * kPi / 6.0;
      break;
    }
    case RelativeZone::merge_zone:
      in_zone = local.x > -10.0 && local.x <= 50.0 && std::fabs(local.y) <= 6.0;
      break;
  }
  if (in_zone) {
    return 1.0;
  }
  const double delta = std::fabs(wrap_angle(bearing - zone_center_bearing(zone)));
  return std::max(0.0, 1.0 - delta / kPi) * 0.8;
}

}  // namespace

std::vector<RankedCandidate> rank_primary(const std::vector<Candidate>& candidates,
                                          const Guidance& guidance, const Trajectory& ego_ref,
                                          const BoxSize& adv_size, const BoxSize& ego_size,
                                          double dt, const TrajRankWeights& weights) {
  if (candidates.empty()) {
    throw std::invalid_argument("rank_primary: empty candidate list");
  }
  const ScoringBias& bias = guidance.guidance.scoring_bias;
  std::vector<RankedCandidate> out;
  out.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    const Approach ap = closest_approach(c.traj, ego_ref, adv_size, ego_size);
    TrajScore s;
    s.collision_proxy = std::exp(-ap.d_min / weights.proxy_scale);
    double mode = mode_tag_score(guidance.mode, c.tag);
    if (!guidance.guidance.behavior_priority.empty() &&
        trigger_prefers_tag(guidance.guidance.behavior_priority.front(), c.tag)) {
      mode = std::min(1.0, mode + 0.1);
    }
    s.mode_consistency = mode;
    s.window_match = window_kernel(ap.frame * dt, guidance.guidance.window_start,
                                   guidance.guidance.window_end);
    const size_t zf = static_cast<size_t>(ap.frame);
    s.zone_match = zone_match_score(ego_ref.states[std::min(zf, ego_ref.states.size() - 1)],
                                    c.traj.states[std::min(zf, c.traj.states.size() - 1)],
                                    guidance.guidance.conflict_zone);
    s.naturalness = trajectory_naturalness(c.traj, dt, weights.jerk_cap);
    s.total = weights.primary_proxy * bias.collision_proxy * s.collision_proxy +
              weights.primary_mode * bias.mode_consistency * s.mode_consistency +
              weights.primary_window * bias.window_match * s.window_match +
              weights.primary_zone * bias.zone_match * s.zone_match;
    out.push_back({i, s});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    return a.score.total > b.score.total;
  });
  return out;
}

namespace {

double role_consistency(const Trajectory& cand, const Trajectory& ego_ref,
                        const GenerationGuidance& g, SupportRole role, double dt,
                        double role_boost, int escape_side) {
  const size_t n = std::min(cand.states.size(), ego_ref.states.size());
  std::vector<Vec2> ego_pts;
  ego_pts.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    ego_pts.push_back(ego_ref.states[k].pos());
  }
  const Polyline ego_path(std::move(ego_pts));
  size_t window_frames = 0;
  double matched = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const double t = k * dt;
    if (t < g.window_start || t > g.window_end) {
      continue;
    }
    ++window_frames;
    const VehicleState& ego = ego_ref.states[k];
    const Vec2 local = rotate(cand.states[k].pos() - ego.pos(), -ego.theta);
    bool match = false;
    bool side_match = true;
    switch (role) {
      case SupportRole::blocker:
        match = local.x >= -15.0 && local.x <= 15.0 && std::fabs(local.y) >= 1.5 &&
                std::fabs(local.y) <= 5.5;
        if (escape_side != 0) {
          side_match = (local.y > 0.0) == (escape_side > 0);
        }
        break;
      case SupportRole::rear_pressure:
        match = local.x <= -1.0 && local.x >= -18.0 && std::fabs(local.y) <= 2.0;
        break;
      case SupportRole::merge_interferer:
        match = local.x >= -5.0 && local.x <= 25.0 &&
                ego_path.distance_to(cand.states[k].pos()) <= 6.0;
        break;
      case SupportRole::timing_shaper: {
        const double range = norm(local);
        match = range >= 8.0 && range <= 30.0;
        break;
      }
    }
    if (match && side_match) {
      matched += 1.0;
    }
  }
  if (window_frames == 0) {
    return 0.0;
  }
  return std::min(1.0, role_boost * matched / static_cast<double>(window_frames));
}

}  // namespace

SupportRanking rank_support(const std::vector<Candidate>& candidates, const Guidance& guidance,
                            SupportRole role, const Trajectory& primary_traj,
                            const Trajectory& ego_ref, const BoxSize& adv_size,
                            const BoxSize& primary_size, const BoxSize& ego_size, double dt,
                            const RankingParams& params, const TrajRankWeights& weights,
                            double role_boost, int escape_side) {
  (void)primary_size;
  SupportRanking out;
  const ScoringBias& bias = guidance.guidance.scoring_bias;
  bool any_safe = false;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    const double d_min = min_pairwise_distance(c.traj, ego_ref, adv_size, ego_size);
    if (d_min <= 0.0) {
      continue;  // must never collide with the ego
    }
    any_safe = true;
    TrajScore s;
    const double pressure_raw =
        std::exp(-(d_min - weights.pressure_offset) / weights.pressure_scale);
    const double pressure = std::clamp(pressure_raw, 0.0, 1.0);
    const double role_score =
        role_consistency(c.traj, ego_ref, guidance.guidance, role, dt, role_boost, escape_side);
    const Approach ap = closest_approach(c.traj, ego_ref, adv_size, ego_size);
    const double timing = window_kernel(ap.frame * dt, guidance.guidance.window_start,
                                        guidance.guidance.window_end);
    s.naturalness = trajectory_naturalness(c.traj, dt, weights.jerk_cap);
    const double overlap =
        corridor_overlap_fraction(c.traj, primary_traj, params.corridor_margin);
    const double distinct = 1.0 - overlap;
    s.collision_proxy = pressure;  // stored for inspection
    s.mode_consistency = role_score;
    s.window_match = timing;
    s.zone_match = distinct;
    s.total = weights.support_pressure * bias.pressure * pressure +
              weights.support_role * bias.role_consistency * role_score +
              weights.support_timing * bias.timing * timing +
              weights.support_natural * bias.naturalness * s.naturalness +
              weights.support_distinct * bias.distinctiveness * distinct;
    out.ranked.push_back({i, s});
  }
  if (!candidates.empty() && !any_safe) {
    out.support_infeasible = true;
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) {
                     return a.score.total > b.score.total;
                   });
  return out;
}

}  // namespace advgen
