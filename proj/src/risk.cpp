#include "advgen/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advgen {

namespace {

constexpr double kTtcScale = 4.0;          // seconds, collision_prob = exp(-ttc/4)
constexpr double kConsequenceSpeed = 25.0; // m/s, saturates the energy proxy
constexpr double kHeadingRateNorm = 0.5;   // rad/s, saturates uncertainty

// Escape corridor of the ego: both adjacent corridors alongside, plus the
// in-lane region behind. Distances are in the ego frame.
double distance_to_escape_corridor(const RelPose& rp) {
  auto rect_dist = [&](double fx0, double fx1, double ly0, double ly1) {
    const double dx = rp.forward < fx0 ? fx0 - rp.forward : (rp.forward > fx1 ? rp.forward - fx1 : 0.0);
    const double dy = rp.left < ly0 ? ly0 - rp.left : (rp.left > ly1 ? rp.left - ly1 : 0.0);
    return std::sqrt(dx * dx + dy * dy);
  };
  const double left_band = rect_dist(-10.0, 30.0, 1.8, 5.5);
  const double right_band = rect_dist(-10.0, 30.0, -5.5, -1.8);
  const double rear_band = rect_dist(-30.0, 0.0, -1.8, 1.8);
  return std::min({left_band, right_band, rear_band});
}

}  // namespace

double distance_risk(const Scene& scene, int vehicle_id) {
  const Track* t = scene.track_by_id(vehicle_id);
  if (t == nullptr) {
    return 0.0;
  }
  const size_t k = static_cast<size_t>(scene.decision_frame());
  if (!t->valid_at(k)) {
    return 0.0;
  }
  const double gap = box_clearance(state_box(scene.current_state(scene.ego), scene.ego.size),
                                   state_box(t->states[k], t->size));
  return 1.0 / (1.0 + gap / 20.0);
}

RiskScore assess_risk(const Scene& scene, int vehicle_id) {
  const Track* t = scene.track_by_id(vehicle_id);
  if (t == nullptr) {
    throw std::invalid_argument("assess_risk: unknown vehicle " + std::to_string(vehicle_id));
  }
  const size_t decision = static_cast<size_t>(scene.decision_frame());
  if (!t->valid_at(decision)) {
    throw std::invalid_argument("assess_risk: vehicle " + std::to_string(vehicle_id) +
                                " missing observation frames");
  }
  RiskScore s;
  s.vehicle_id = vehicle_id;

  const LaneRelation rel = lane_relation(scene, vehicle_id);
  switch (rel) {
    case LaneRelation::same:
    case LaneRelation::adjacent:
    case LaneRelation::crossing:
    case LaneRelation::merging:
      s.relevance = 1.0;
      break;
    case LaneRelation::offroad:
      s.relevance = 0.0;
      break;
    case LaneRelation::distant: {
      const VehicleState& ego = scene.current_state(scene.ego);
      const auto ego_lane = assign_lane(scene.map, ego.pos());
      const auto veh_lane = assign_lane(scene.map, t->states[decision].pos());
      if (ego_lane && veh_lane) {
        const int hops = lane_graph_hops(scene.map, *ego_lane, *veh_lane);
        s.relevance = hops >= 0 ? 1.0 / (1.0 + hops) : 0.0;
      }
      break;
    }
  }

  s.uncertainty = std::min(1.0, heading_rate_std(scene, *t) / kHeadingRateNorm);

  const double ttc = constant_velocity_ttc(scene, vehicle_id);
  s.collision_prob = std::isfinite(ttc) ? std::exp(-ttc / kTtcScale) : 0.0;

  const VehicleState& ego = scene.current_state(scene.ego);
  const VehicleState& veh = t->states[decision];
  const Vec2 rel_vel = heading_dir(veh.theta) * veh.v - heading_dir(ego.theta) * ego.v;
  const double v_rel = norm(rel_vel);
  s.consequence = std::min(1.0, (v_rel * v_rel) / (kConsequenceSpeed * kConsequenceSpeed));

  s.total = 0.3 * s.relevance + 0.1 * s.uncertainty + 0.4 * s.collision_prob + 0.2 * s.consequence;
  return s;
}

std::vector<ShortlistCandidate> shortlist(const Scene& scene, int k) {
  if (k < 1) {
    throw std::invalid_argument("shortlist: k must be >= 1");
  }
  std::vector<ShortlistCandidate> all;
  for (const Track& t : scene.others) {
    if (!t.valid_at(static_cast<size_t>(scene.decision_frame()))) {
      continue;
    }
    ShortlistCandidate c;
    c.vehicle_id = t.vehicle_id;
    c.risk = assess_risk(scene, t.vehicle_id);
    c.dist_risk = distance_risk(scene, t.vehicle_id);
    all.push_back(c);
  }
  std::sort(all.begin(), all.end(), [](const ShortlistCandidate& a, const ShortlistCandidate& b) {
    if (a.risk.total != b.risk.total) {
      return a.risk.total > b.risk.total;
    }
    return a.vehicle_id < b.vehicle_id;
  });
  if (static_cast<int>(all.size()) > k) {
    all.resize(static_cast<size_t>(k));
  }
  return all;
}

int select_primary(const std::vector<std::pair<int, PrimaryFeatures>>& candidates,
                   const RankingParams& params) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_primary: empty shortlist");
  }
  int best_id = candidates.front().first;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [id, f] : candidates) {
    const double s = params.primary_weights[0] * f.dist_risk +
                     params.primary_weights[1] * f.risk_total +
                     params.primary_weights[2] * f.ce_match;
    if (s > best || (s == best && id < best_id)) {
      best = s;
      best_id = id;
    }
  }
  return best_id;
}

std::pair<SupportRole, double> best_role(const Scene& scene, int vehicle_id) {
  const RelPose rp = relative_pose(scene, vehicle_id);
  const LaneRelation rel = lane_relation(scene, vehicle_id);

  auto graded = [](double dist) { return std::max(0.0, 1.0 - dist / 10.0); };
  // blocker: beside or slightly ahead, in an adjacent corridor
  double blocker = 0.0;
  {
    const double dx = rp.forward < -5.0 ? -5.0 - rp.forward : (rp.forward > 30.0 ? rp.forward - 30.0 : 0.0);
    const double a = std::fabs(rp.left);
    const double dy = a < 1.8 ? 1.8 - a : (a > 5.5 ? a - 5.5 : 0.0);
    blocker = graded(std::sqrt(dx * dx + dy * dy));
  }
  // rear pressure: behind the ego in its own corridor
  double rear = 0.0;
  {
    const double dx = rp.forward < -30.0 ? -30.0 - rp.forward : (rp.forward > -2.0 ? rp.forward + 2.0 : 0.0);
    const double a = std::fabs(rp.left);
    const double dy = a > 1.8 ? a - 1.8 : 0.0;
    rear = graded(std::sqrt(dx * dx + dy * dy));
  }
  double merge_i = rel == LaneRelation::merging ? 1.0 : 0.0;
  const double shaper = 0.5;  // always available fallback

  std::array<std::pair<SupportRole, double>, 4> scores = {
      std::pair{SupportRole::blocker, blocker},
      std::pair{SupportRole::rear_pressure, rear},
      std::pair{SupportRole::merge_interferer, merge_i},
      std::pair{SupportRole::timing_shaper, shaper}};
  auto best = scores[0];
  for (const auto& s : scores) {
    if (s.second > best.second) {
      best = s;
    }
  }
  return best;
}

namespace {

// Constant-velocity corridor polyline over the horizon; sampled per frame.
std::vector<Vec2> projected_corridor(const Scene& scene, int vehicle_id) {
  std::vector<Vec2> out;
  const Track* t = scene.track_by_id(vehicle_id);
  if (t == nullptr) {
    return out;
  }
  const size_t k = static_cast<size_t>(scene.decision_frame());
  if (!t->valid_at(k)) {
    return out;
  }
  const VehicleState& s = t->states[k];
  const Vec2 step = heading_dir(s.theta) * std::max(s.v, 0.2);
  out.reserve(static_cast<size_t>(scene.t_pred_frames));
  for (int i = 0; i < scene.t_pred_frames; ++i) {
    out.push_back(s.pos() + step * (i * scene.dt));
  }
  return out;
}

}  // namespace

SupportFeatures support_features(const Scene& scene, int vehicle_id, int primary_id,
                                 const GenerationGuidance& guidance, const RankingParams& params) {
  SupportFeatures f;
  f.role_match = best_role(scene, vehicle_id).second;

  const RelPose rp = relative_pose(scene, vehicle_id);
  const double corridor_dist = distance_to_escape_corridor(rp);
  f.geo_pressure = corridor_dist <= 0.0 ? 1.0 : std::max(0.0, 1.0 - corridor_dist / 15.0);

  const ConflictEstimate c = estimate_conflict(scene, vehicle_id);
  f.time_compat = c.exists ? window_kernel(c.t_vehicle, guidance.window_start, guidance.window_end)
                           : 0.0;

  const std::vector<Vec2> mine = projected_corridor(scene, vehicle_id);
  const std::vector<Vec2> primary = projected_corridor(scene, primary_id);
  if (!mine.empty() && primary.size() >= 2) {
    const Polyline ppath(primary);
    int overlapping = 0;
    for (const Vec2& p : mine) {
      if (ppath.distance_to(p) <= params.corridor_margin) {
        ++overlapping;
      }
    }
    f.corridor_overlap = static_cast<double>(overlapping) / static_cast<double>(mine.size());
  }
  return f;
}

double support_score(const SupportFeatures& f, const RankingParams& params) {
  return params.support_weights[0] * f.role_match + params.support_weights[1] * f.geo_pressure +
         params.support_weights[2] * f.time_compat -
         params.support_weights[3] * f.corridor_overlap;
}

std::vector<std::pair<int, SupportRole>> select_supports(const std::vector<int>& candidate_ids,
                                                         int primary_id, const Scene& scene,
                                                         const GenerationGuidance& guidance,
                                                         const RankingParams& params) {
  struct Scored {
    int id;
    SupportRole role;
    double score;
  };
  std::vector<Scored> scored;
  for (int id : candidate_ids) {
    if (id == primary_id) {
      continue;
    }
    const SupportFeatures f = support_features(scene, id, primary_id, guidance, params);
    const double s = support_score(f, params);
    if (s <= 0.0) {
      continue;  // never force a harmful support
    }
    scored.push_back({id, best_role(scene, id).first, s});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    return a.id < b.id;
  });
  std::vector<std::pair<int, SupportRole>> out;
  for (const Scored& s : scored) {
    if (static_cast<int>(out.size()) >= params.m_supports_max) {
      break;
    }
    out.push_back({s.id, s.role});
  }
  return out;
}

}  // namespace advgen
