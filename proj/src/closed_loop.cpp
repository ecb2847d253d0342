#include "advgen/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advgen/rng.hpp"

namespace advgen {

const char* to_string(FailureType f) {
  switch (f) {
    case FailureType::none_collided: return "none_collided";
    case FailureType::early_brake_escape: return "early_brake_escape";
    case FailureType::steer_escape: return "steer_escape";
    case FailureType::timing_mismatch: return "timing_mismatch";
    case FailureType::near_miss: return "near_miss";
  }
  return "none_collided";
}

const char* to_string(RetryProfileKind k) {
  switch (k) {
    case RetryProfileKind::neutral: return "neutral";
    case RetryProfileKind::timing_sync: return "timing_sync";
    case RetryProfileKind::steering_trap: return "steering_trap";
    case RetryProfileKind::brake_delay_pressure: return "brake_delay_pressure";
    case RetryProfileKind::near_miss_push: return "near_miss_push";
    case RetryProfileKind::terminal_refine: return "terminal_refine";
  }
  return "neutral";
}

namespace {

Polyline logged_ego_path(const Scene& scene) {
  std::vector<Vec2> pts;
  pts.reserve(scene.ego.states.size() + 1);
  for (const VehicleState& s : scene.ego.states) {
    pts.push_back(s.pos());
  }
  if (pts.size() >= 2) {
    const Vec2 tail = pts.back() - pts[pts.size() - 2];
    const double len = std::max(norm(tail), 1e-6);
    pts.push_back(pts.back() + tail * (100.0 / len));  // never run out of path
  }
  return Polyline(std::move(pts));
}

std::vector<ObservedVehicle> observe(const Scene& scene,
                                     const std::vector<Trajectory>& adversaries, int k) {
  std::vector<ObservedVehicle> out;
  for (const Trajectory& adv : adversaries) {
    const Track* track = scene.track_by_id(adv.vehicle_id);
    const size_t idx = std::min(static_cast<size_t>(k), adv.states.size() - 1);
    const VehicleState& s = adv.states[idx];
    out.push_back({s.pos(), s.v, s.theta, track != nullptr ? track->size : BoxSize{}});
  }
  const size_t f = static_cast<size_t>(scene.decision_frame() + k);
  for (const Track& other : scene.others) {
    bool is_adv = false;
    for (const Trajectory& adv : adversaries) {
      if (adv.vehicle_id == other.vehicle_id) {
        is_adv = true;
        break;
      }
    }
    if (is_adv || !other.valid_at(f)) {
      continue;
    }
    const VehicleState& s = other.states[f];
    out.push_back({s.pos(), s.v, s.theta, other.size});
  }
  return out;
}

Trajectory integrate_ego(const Scene& scene, const std::vector<Trajectory>& adversaries,
                         const ControllerSpec& controller, const DynLimits& limits) {
  Trajectory executed;
  executed.vehicle_id = scene.ego.vehicle_id;
  executed.states.resize(static_cast<size_t>(scene.t_pred_frames));
  const Polyline path = logged_ego_path(scene);
  VehicleState s = scene.current_state(scene.ego);
  double desired = s.v;
  if (controller.kind == ControllerKind::idm && controller.idm.v0 > 0.0) {
    desired = controller.idm.v0;
  } else if (controller.kind == ControllerKind::cruise && controller.cruise.set_speed > 0.0) {
    desired = controller.cruise.set_speed;
  }
  desired = std::max(desired, 0.5);

  ControlContext ctx;
  ctx.reference_path = &path;
  ctx.desired_speed = desired;
  ctx.dt = scene.dt;
  ctx.limits = &limits;

  executed.states[0] = s;
  for (int k = 0; k + 1 < scene.t_pred_frames; ++k) {
    const auto others = observe(scene, adversaries, k);
    const ControlAction action = step_controller(controller, s, scene.ego.size, others, ctx);
    const double v_next = std::max(0.0, s.v + action.a_long * scene.dt);
    const double v_avg = 0.5 * (s.v + v_next);
    const double dtheta = v_avg * action.curvature * scene.dt;
    const Vec2 step = heading_dir(wrap_angle(s.theta + 0.5 * dtheta)) * (v_avg * scene.dt);
    s.x += step.x;
    s.y += step.y;
    s.theta = wrap_angle(s.theta + dtheta);
    s.v = v_next;
    s.a = action.a_long;
    executed.states[static_cast<size_t>(k) + 1] = s;
  }
  return executed;
}

}  // namespace

FailureType classify_failure(const Feedback& feedback, const Scene& scene,
                             const GenerationGuidance& guidance, const LoopConfig& loop) {
  if (feedback.collided) {
    throw std::logic_error("classify_failure: called on a collided run");
  }
  if (feedback.d_min < loop.near_miss_dist) {
    return FailureType::near_miss;
  }
  // braking escape: strong deceleration starting before the conflict window
  double brake_onset = -1.0;
  for (size_t k = 0; k < feedback.executed_ego.states.size(); ++k) {
    if (feedback.executed_ego.states[k].a <= -loop.brake_escape_decel) {
      brake_onset = static_cast<double>(k) * scene.dt;
      break;
    }
  }
  if (brake_onset >= 0.0 && brake_onset < guidance.window_start) {
    return FailureType::early_brake_escape;
  }
  // steering escape: lateral deviation from the logged reference path
  const Polyline ref = logged_ego_path(scene);
  double max_dev = 0.0;
  for (const VehicleState& s : feedback.executed_ego.states) {
    max_dev = std::max(max_dev, ref.distance_to(s.pos()));
  }
  if (max_dev > loop.steer_escape_dev) {
    return FailureType::steer_escape;
  }
  return FailureType::timing_mismatch;
}

Feedback rollout(const Scene& scene, const std::vector<Trajectory>& adversaries,
                 const ControllerSpec& controller, const DynLimits& limits,
                 const GenerationGuidance* guidance, const LoopConfig& loop) {
  Feedback fb;
  fb.executed_ego = controller.kind == ControllerKind::replay
                        ? replay_trajectory(scene, scene.ego)
                        : integrate_ego(scene, adversaries, controller, limits);

  fb.d_min = std::numeric_limits<double>::infinity();
  const size_t frames = fb.executed_ego.states.size();
  for (size_t k = 0; k < frames && !fb.collided; ++k) {
    const OrientedBox ego_box = state_box(fb.executed_ego.states[k], scene.ego.size);
    for (const Trajectory& adv : adversaries) {
      if (k >= adv.states.size()) {
        continue;
      }
      const Track* track = scene.track_by_id(adv.vehicle_id);
      const BoxSize size = track != nullptr ? track->size : BoxSize{};
      const OrientedBox adv_box = state_box(adv.states[k], size);
      const double d = box_clearance(ego_box, adv_box);
      fb.d_min = std::min(fb.d_min, d);
      if (d <= 0.0) {
        fb.collided = true;
        fb.collision_frame = static_cast<int>(k);
        fb.collider_ids.push_back(adv.vehicle_id);
      }
    }
  }
  if (adversaries.empty()) {
    fb.d_min = std::numeric_limits<double>::infinity();
  }
  if (fb.collided) {
    fb.d_min = 0.0;
    fb.failure = FailureType::none_collided;
    std::sort(fb.collider_ids.begin(), fb.collider_ids.end());
  } else {
    GenerationGuidance whole;
    whole.window_start = 0.0;
    whole.window_end = scene.horizon_seconds();
    fb.failure = classify_failure(fb, scene, guidance != nullptr ? *guidance : whole, loop);
  }
  return fb;
}

RetryProfile map_retry_profile(FailureType failure) {
  RetryProfile p;
  switch (failure) {
    case FailureType::early_brake_escape:
      p.kind = RetryProfileKind::brake_delay_pressure;
      p.window_start_shift = 0.5;  // expose the conflict later
      p.boosted_role = SupportRole::rear_pressure;
      p.role_boost = 1.5;
      break;
    case FailureType::steer_escape:
      p.kind = RetryProfileKind::steering_trap;
      p.boosted_role = SupportRole::blocker;
      p.role_boost = 1.5;
      break;
    case FailureType::timing_mismatch:
      p.kind = RetryProfileKind::timing_sync;
      break;
    case FailureType::near_miss:
      p.kind = RetryProfileKind::near_miss_push;
      p.proxy_scale = 1.0;
      break;
    case FailureType::none_collided:
      break;
  }
  return p;
}

Guidance apply_profile(const Guidance& guidance, const RetryProfile& profile,
                       double horizon_seconds) {
  Guidance g = guidance;
  double t_a = g.guidance.window_start;
  double t_b = g.guidance.window_end;
  const double width = std::max(0.4, t_b - t_a);
  if (profile.recenter_time) {
    const double c = std::clamp(*profile.recenter_time, 0.0, horizon_seconds);
    t_a = c - width * 0.5;
    t_b = c + width * 0.5;
  }
  t_a += profile.window_start_shift;
  t_a = std::clamp(t_a, 0.0, horizon_seconds - 0.4);
  t_b = std::clamp(t_b, t_a + 0.4, horizon_seconds);
  g.guidance.window_start = t_a;
  g.guidance.window_end = t_b;
  return g;
}

double closed_loop_score(const Feedback& feedback, const ScenarioGateReport& gates,
                         const std::vector<Trajectory>& adversaries, double dt, int round,
                         const LoopConfig& loop, double jerk_cap) {
  const double collided = feedback.collided ? 1.0 : 0.0;
  const double proximity =
      std::isfinite(feedback.d_min) ? std::exp(-feedback.d_min / 2.0) : 0.0;
  double rule_fraction = 1.0;
  if (!gates.per_vehicle.empty()) {
    int ok = 0;
    for (const auto& [id, r] : gates.per_vehicle) {
      (void)id;
      if (r.overall()) {
        ++ok;
      }
    }
    rule_fraction = static_cast<double>(ok) / static_cast<double>(gates.per_vehicle.size());
  }
  double naturalness = 1.0;
  if (!adversaries.empty()) {
    naturalness = 0.0;
    for (const Trajectory& t : adversaries) {
      naturalness += trajectory_naturalness(t, dt, jerk_cap);
    }
    naturalness /= static_cast<double>(adversaries.size());
  }
  const double discount = std::pow(loop.alpha_discount, round);
  return loop.jcl_weights[0] * collided + loop.jcl_weights[1] * discount * proximity +
         loop.jcl_weights[2] * rule_fraction + loop.jcl_weights[3] * naturalness;
}

namespace {

struct RoundScenario {
  bool ok = false;
  std::string reason;
  std::vector<Trajectory> adversaries;  // primary first
  ScenarioGateReport gates;
};

// One generation pass: lattice + gates + role-aware ranking for the primary
// and every support vehicle.
RoundScenario generate_round(const Scene& scene, const Guidance& guidance,
                             const RetryProfile& profile, const Trajectory& ego_ref,
                             const EngineSettings& settings, uint64_t seed) {
  RoundScenario out;
  std::vector<int> adversary_ids{guidance.primary_id};
  for (int id : guidance.support_ids) {
    adversary_ids.push_back(id);
  }

  TrajRankWeights weights = settings.traj_weights;
  weights.proxy_scale = profile.proxy_scale;

  const Track* primary_track = scene.track_by_id(guidance.primary_id);
  if (primary_track == nullptr) {
    out.reason = "primary track missing";
    return out;
  }
  const BoxSize ego_size = scene.ego.size;

  // primary
  CandidateSet primary_set = generate_candidates(scene, guidance.primary_id, settings.candidates_m,
                                                 hash_combine(seed, 0x7072696dull),
                                                 &guidance.guidance);
  std::vector<Candidate> primary_ok;
  for (Candidate& c : primary_set.candidates) {
    const GateReport r = check_trajectory(c.traj, scene, settings.limits, adversary_ids,
                                          primary_track->size, settings.full_footprint_road);
    if (settings.gates.passes(r)) {
      primary_ok.push_back(std::move(c));
    }
  }
  if (primary_ok.empty()) {
    out.reason = "primary gated out";
    return out;
  }
  const auto primary_ranked = rank_primary(primary_ok, guidance, ego_ref, primary_track->size,
                                           ego_size, scene.dt, weights);
  Trajectory primary_traj = primary_ok[primary_ranked.front().index].traj;
  out.adversaries.push_back(primary_traj);

  // supports, best first, skipping any that cannot be placed safely
  for (int sid : guidance.support_ids) {
    const Track* track = scene.track_by_id(sid);
    if (track == nullptr) {
      continue;
    }
    const auto role_it = guidance.roles.find(sid);
    const SupportRole role = role_it != guidance.roles.end() ? role_it->second
                                                             : SupportRole::timing_shaper;
    CandidateSet set = generate_candidates(scene, sid, settings.candidates_m,
                                           hash_combine(seed, static_cast<uint64_t>(sid)),
                                           &guidance.guidance);
    std::vector<Candidate> passed;
    for (Candidate& c : set.candidates) {
      const GateReport r = check_trajectory(c.traj, scene, settings.limits, adversary_ids,
                                            track->size, settings.full_footprint_road);
      if (settings.gates.passes(r)) {
        passed.push_back(std::move(c));
      }
    }
    if (passed.empty()) {
      continue;
    }
    const double boost =
        profile.boosted_role && *profile.boosted_role == role ? profile.role_boost : 1.0;
    const SupportRanking ranking =
        rank_support(passed, guidance, role, primary_traj, ego_ref, track->size,
                     primary_track->size, ego_size, scene.dt, settings.ranking, weights, boost,
                     profile.escape_side);
    for (const RankedCandidate& rc : ranking.ranked) {
      const Trajectory& cand = passed[rc.index].traj;
      bool clashes = false;
      for (const Trajectory& accepted : out.adversaries) {
        const Track* at = scene.track_by_id(accepted.vehicle_id);
        if (min_pairwise_distance(cand, accepted, track->size,
                                  at != nullptr ? at->size : BoxSize{}) <= 0.0) {
          clashes = true;
          break;
        }
      }
      if (!clashes) {
        out.adversaries.push_back(cand);
        break;
      }
    }
  }

  out.gates = check_scenario(out.adversaries, scene, settings.limits,
                             settings.full_footprint_road);
  // per-candidate gating already enforced what the toggles require; the
  // scenario-level pass re-validates it
  bool pass = true;
  for (const auto& [id, r] : out.gates.per_vehicle) {
    (void)id;
    pass = pass && settings.gates.passes(r);
  }
  if (!pass) {
    out.reason = "scenario gated out";
    out.adversaries.clear();
    return out;
  }
  out.ok = true;
  return out;
}

double closest_approach_time(const Trajectory& a, const Trajectory& b, const BoxSize& sa,
                             const BoxSize& sb, double dt) {
  double best = std::numeric_limits<double>::infinity();
  double t = 0.0;
  const size_t n = std::min(a.states.size(), b.states.size());
  for (size_t k = 0; k < n; ++k) {
    const double d = box_clearance(state_box(a.states[k], sa), state_box(b.states[k], sb));
    if (d < best) {
      best = d;
      t = static_cast<double>(k) * dt;
      if (d <= 0.0) {
        break;
      }
    }
  }
  return t;
}

}  // namespace

ClosedLoopResult run_closed_loop(const Scene& scene, const Guidance& guidance,
                                 const ControllerSpec& controller, const EngineSettings& settings,
                                 uint64_t scene_seed) {
  std::vector<int> shortlist_ids{guidance.primary_id};
  for (int id : guidance.support_ids) {
    shortlist_ids.push_back(id);
  }
  {
    const auto violations = validate_guidance(guidance, shortlist_ids, scene.horizon_seconds());
    if (!violations.empty()) {
      throw std::invalid_argument("run_closed_loop: invalid guidance: " + violations.front());
    }
  }

  ClosedLoopResult result;
  result.best_j = -std::numeric_limits<double>::infinity();
  Trajectory ego_ref = replay_trajectory(scene, scene.ego);
  RetryProfile profile;  // neutral at round 0
  std::deque<Trajectory> ego_buffer{ego_ref};
  const Track* primary_track = scene.track_by_id(guidance.primary_id);
  const BoxSize primary_size = primary_track != nullptr ? primary_track->size : BoxSize{};

  for (int round = 0; round <= settings.loop.r_max; ++round) {
    RoundLog log;
    log.round = round;
    log.profile = profile.kind;
    const uint64_t round_seed = hash_combine(scene_seed, static_cast<uint64_t>(round));
    const Guidance adjusted = apply_profile(guidance, profile, scene.horizon_seconds());

    RoundScenario scenario = generate_round(scene, adjusted, profile, ego_ref, settings,
                                            round_seed);
    if (!scenario.ok) {
      log.reject_reason = scenario.reason;
      result.rounds.push_back(std::move(log));
      continue;  // same profile, fresh seed next round
    }
    log.generated = true;
    log.gates = scenario.gates;
    log.adversaries = scenario.adversaries;

    Feedback fb = rollout(scene, scenario.adversaries, controller, settings.limits,
                          &adjusted.guidance, settings.loop);
    AttributionReport attribution =
        check_attribution(fb.executed_ego, scene.ego.size, scenario.adversaries, scene,
                          guidance.primary_id, guidance.support_ids);
    log.attribution = attribution;
    log.attribution_clean = !attribution.support_violation && !attribution.multi_violation;
    log.j_cl = closed_loop_score(fb, scenario.gates, scenario.adversaries, scene.dt, round,
                                 settings.loop, settings.traj_weights.jerk_cap);
    log.feedback = fb;

    result.feasible = true;
    if (log.attribution_clean && log.j_cl > result.best_j) {
      result.best_j = log.j_cl;
      result.best_round = round;
      result.best_adversaries = scenario.adversaries;
      result.best_gates = scenario.gates;
      result.best_feedback = fb;
      result.best_attribution = attribution;
      log.is_best = true;
    }

    const bool clean_collision = fb.collided && log.attribution_clean;
    if (clean_collision) {
      result.rounds.push_back(std::move(log));
      break;
    }

    // feedback for the next round
    ego_buffer.push_back(fb.executed_ego);
    while (static_cast<int>(ego_buffer.size()) > settings.loop.n_rollout_buffer) {
      ego_buffer.pop_front();
    }
    ego_ref = fb.executed_ego;
    if (!fb.collided) {
      RetryProfile next = map_retry_profile(fb.failure);
      if (next.kind == RetryProfileKind::timing_sync && !scenario.adversaries.empty()) {
        // arrival estimate: mean closest-approach time of the buffered egos
        // to the current primary plan
        double sum = 0.0;
        for (const Trajectory& past : ego_buffer) {
          sum += closest_approach_time(past, scenario.adversaries.front(), scene.ego.size,
                                       primary_size, scene.dt);
        }
        next.recenter_time = sum / static_cast<double>(ego_buffer.size());
      }
      if (next.kind == RetryProfileKind::steering_trap) {
        const Polyline ref = logged_ego_path(scene);
        double worst = 0.0;
        for (const VehicleState& s : fb.executed_ego.states) {
          const double lat = ref.project(s.pos()).lateral;
          if (std::fabs(lat) > std::fabs(worst)) {
            worst = lat;
          }
        }
        next.escape_side = worst >= 0.0 ? 1 : -1;
      }
      profile = next;
    }

    // terminal refinement on the last round without a clean collision; the
    // r_max = 0 baseline is the no-feedback setting, so refinement (which
    // consumes the executed ego) only runs when retries are enabled
    if (round == settings.loop.r_max && settings.loop.r_max >= 1 &&
        !scenario.adversaries.empty()) {
      const RefineResult refined =
          terminal_refine(scenario.adversaries.front(), fb.executed_ego, scene, settings,
                          adjusted.guidance, shortlist_ids,
                          hash_combine(round_seed, 0x7465726dull));
      RoundLog rlog;
      rlog.round = round + 1;
      rlog.profile = RetryProfileKind::terminal_refine;
      rlog.terminal_refined = refined.refined;
      if (!refined.refined) {
        rlog.reject_reason = refined.all_rejected ? "all refinement candidates failed gates"
                                                  : "refinement kept the original";
        result.rounds.push_back(std::move(log));
        result.rounds.push_back(std::move(rlog));
        continue;
      }
      std::vector<Trajectory> refined_adversaries = scenario.adversaries;
      refined_adversaries.front() = refined.traj;
      const ScenarioGateReport refined_gates = check_scenario(
          refined_adversaries, scene, settings.limits, settings.full_footprint_road);
      bool pass = true;
      for (const auto& [id, r] : refined_gates.per_vehicle) {
        (void)id;
        pass = pass && settings.gates.passes(r);
      }
      if (!pass) {
        rlog.reject_reason = "refined scenario gated out";
        result.rounds.push_back(std::move(log));
        result.rounds.push_back(std::move(rlog));
        continue;
      }
      Feedback rfb = rollout(scene, refined_adversaries, controller, settings.limits,
                             &adjusted.guidance, settings.loop);
      AttributionReport rattr =
          check_attribution(rfb.executed_ego, scene.ego.size, refined_adversaries, scene,
                            guidance.primary_id, guidance.support_ids);
      rlog.generated = true;
      rlog.gates = refined_gates;
      rlog.adversaries = refined_adversaries;
      rlog.feedback = rfb;
      rlog.attribution = rattr;
      rlog.attribution_clean = !rattr.support_violation && !rattr.multi_violation;
      rlog.j_cl = closed_loop_score(rfb, refined_gates, refined_adversaries, scene.dt, round,
                                    settings.loop, settings.traj_weights.jerk_cap);
      result.feasible = true;
      if (rlog.attribution_clean && rlog.j_cl > result.best_j) {
        result.best_j = rlog.j_cl;
        result.best_round = rlog.round;
        result.best_adversaries = refined_adversaries;
        result.best_gates = refined_gates;
        result.best_feedback = rfb;
        result.best_attribution = rattr;
        rlog.is_best = true;
      }
      result.rounds.push_back(std::move(log));
      result.rounds.push_back(std::move(rlog));
      continue;
    }
    result.rounds.push_back(std::move(log));
  }
  return result;
}

namespace {

// Smooth 0 -> 1 ramp over the final `window` seconds of the horizon.
double tail_ramp(double t, double horizon, double window) {
  if (t <= horizon - window) {
    return 0.0;
  }
  const double u = std::clamp((t - (horizon - window)) / window, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

VehicleState lerp_state(const Trajectory& traj, double t, double dt) {
  const double idx = t / dt;
  const size_t lo = static_cast<size_t>(
      std::clamp(std::floor(idx), 0.0, static_cast<double>(traj.states.size() - 1)));
  const size_t hi = std::min(lo + 1, traj.states.size() - 1);
  const double u = std::clamp(idx - static_cast<double>(lo), 0.0, 1.0);
  const VehicleState& a = traj.states[lo];
  const VehicleState& b = traj.states[hi];
  VehicleState s;
  s.x = a.x + (b.x - a.x) * u;
  s.y = a.y + (b.y - a.y) * u;
  s.v = a.v + (b.v - a.v) * u;
  s.a = a.a + (b.a - a.a) * u;
  s.theta = wrap_angle(a.theta + wrap_angle(b.theta - a.theta) * u);
  return s;
}

// Recomputes v/theta/a from positions so gates see consistent kinematics.
void rebuild_kinematics(Trajectory& traj, double dt) {
  const size_t n = traj.states.size();
  for (size_t k = 0; k + 1 < n; ++k) {
    const Vec2 step = traj.states[k + 1].pos() - traj.states[k].pos();
    const double len = norm(step);
    traj.states[k].v = len / dt;
    if (len > 1e-4) {
      traj.states[k].theta = std::atan2(step.y, step.x);
    } else if (k > 0) {
      traj.states[k].theta = traj.states[k - 1].theta;
    }
  }
  if (n >= 2) {
    traj.states[n - 1].v = traj.states[n - 2].v;
    traj.states[n - 1].theta = traj.states[n - 2].theta;
  }
  for (size_t k = 0; k + 1 < n; ++k) {
    traj.states[k].a = (traj.states[k + 1].v - traj.states[k].v) / dt;
  }
  if (n >= 2) {
    traj.states[n - 1].a = traj.states[n - 2].a;
  }
}

struct TermScore {
  double value = 0.0;
};

double escape_pressure(const Trajectory& cand, const Trajectory& executed_ego, const Scene& scene,
                       const BoxSize& cand_size, int approach_frame) {
  const Polyline ref = logged_ego_path(scene);
  (void)cand_size;
  const size_t k = std::min(static_cast<size_t>(approach_frame),
                            executed_ego.states.size() - 1);
  const VehicleState& ego = executed_ego.states[k];
  const PathProjection proj = ref.project(ego.pos());
  if (std::fabs(proj.lateral) < 0.3) {
    return 0.5;  // ego did not commit to a side
  }
  const double ref_heading = ref.heading_at(proj.s);
  const Vec2 escape_dir = rotate(Vec2{0.0, proj.lateral > 0.0 ? 1.0 : -1.0}, ref_heading);
  const Vec2 toward_cand = cand.states[std::min(k, cand.states.size() - 1)].pos() - ego.pos();
  const double len = norm(toward_cand);
  if (len < 1e-6) {
    return 1.0;
  }
  return std::max(0.0, dot(toward_cand, escape_dir) / len);
}

double refine_score(const Trajectory& cand, const Trajectory& executed_ego, const Scene& scene,
                    const BoxSize& cand_size, const GenerationGuidance& guidance) {
  const BoxSize ego_size = scene.ego.size;
  double d_min = std::numeric_limits<double>::infinity();
  int approach_frame = 0;
  int near_frames = 0;
  const size_t n = std::min(cand.states.size(), executed_ego.states.size());
  for (size_t k = 0; k < n; ++k) {
    const double d = box_clearance(state_box(cand.states[k], cand_size),
                                   state_box(executed_ego.states[k], ego_size));
    if (d < d_min) {
      d_min = d;
      approach_frame = static_cast<int>(k);
    }
    if (d < 2.0) {
      ++near_frames;
    }
  }
  const double proxy = std::exp(-d_min / 2.0);
  const double closeness = 1.0 - std::min(d_min / 5.0, 1.0);
  const double escape = escape_pressure(cand, executed_ego, scene, cand_size, approach_frame);
  const double near_fraction = n > 0 ? static_cast<double>(near_frames) / static_cast<double>(n)
                                     : 0.0;
  const double window = window_kernel(approach_frame * scene.dt, guidance.window_start,
                                      guidance.window_end);
  return 0.4 * proxy + 0.25 * closeness + 0.15 * escape + 0.1 * near_fraction + 0.1 * window;
}

Trajectory pursuit_to_point(const Scene& scene, const Track& track, const Vec2& target,
                            double arrive_time, double kappa_max) {
  const VehicleState& cur = scene.current_state(track);
  Trajectory traj;
  traj.vehicle_id = track.vehicle_id;
  traj.states.resize(static_cast<size_t>(scene.t_pred_frames));
  const double dist = distance(cur.pos(), target);
  const double t_arr = std::max(arrive_time, 0.5);
  // constant acceleration that covers `dist` in t_arr, then hold
  const double accel = std::clamp(2.0 * (dist - cur.v * t_arr) / (t_arr * t_arr), -6.0, 6.0);
  const Vec2 dir = target - cur.pos();
  const Vec2 along = norm(dir) > 1e-6 ? dir * (1.0 / norm(dir)) : heading_dir(cur.theta);
  std::vector<Vec2> pts{cur.pos(), target, target + along * 60.0};
  const Polyline path(std::move(pts));

  VehicleState s = cur;
  s.a = accel;
  traj.states[0] = s;
  for (int k = 1; k < scene.t_pred_frames; ++k) {
    const double t = k * scene.dt;
    const double a_now = t <= t_arr ? accel : 0.0;
    const double v_next = std::clamp(s.v + a_now * scene.dt, 0.0, 30.0);
    const double v_avg = 0.5 * (s.v + v_next);
    double kappa = 0.0;
    if (v_avg > 1e-3) {
      const double ld = std::max(3.0, 0.8 * s.v);
      const PathProjection proj = path.project(s.pos());
      const Vec2 tgt = path.point_at(proj.s + ld);
      const Vec2 local = rotate(tgt - s.pos(), -s.theta);
      const double d2 = std::max(norm_sq(local), 1e-6);
      kappa = std::clamp(2.0 * local.y / d2, -kappa_max, kappa_max);
    }
    const double dtheta = v_avg * kappa * scene.dt;
    const Vec2 step = heading_dir(wrap_angle(s.theta + 0.5 * dtheta)) * (v_avg * scene.dt);
    s.x += step.x;
    s.y += step.y;
    s.theta = wrap_angle(s.theta + dtheta);
    s.v = v_next;
    s.a = a_now;
    traj.states[static_cast<size_t>(k)] = s;
  }
  return traj;
}

}  // namespace

RefineResult terminal_refine(const Trajectory& primary, const Trajectory& executed_ego,
                             const Scene& scene, const EngineSettings& settings,
                             const GenerationGuidance& guidance,
                             const std::vector<int>& adversary_ids, uint64_t seed) {
  (void)seed;
  RefineResult out;
  out.traj = primary;
  const Track* track = scene.track_by_id(primary.vehicle_id);
  if (track == nullptr || primary.states.size() < 4) {
    return out;
  }
  const BoxSize size = track->size;
  const double dt = scene.dt;
  const double horizon = scene.horizon_seconds();
  constexpr double kTail = 1.5;  // seconds of trajectory affected

  std::vector<Trajectory> candidates;
  // Nudge: lateral offsets x time shifts blended over the tail
  const double lat_offsets[] = {-0.5, -0.25, 0.25, 0.5};
  const double time_shifts[] = {-0.2, 0.0, 0.2};
  for (double off : lat_offsets) {
    for (double shift : time_shifts) {
      Trajectory t = primary;
      for (size_t k = 0; k < t.states.size(); ++k) {
        const double time = static_cast<double>(k) * dt;
        const double r = tail_ramp(time, horizon, kTail);
        if (r <= 0.0) {
          continue;
        }
        VehicleState warped = lerp_state(primary, std::clamp(time + shift * r, 0.0, horizon - dt),
                                         dt);
        const Vec2 normal{-std::sin(warped.theta), std::cos(warped.theta)};
        t.states[k].x = warped.x + normal.x * off * r;
        t.states[k].y = warped.y + normal.y * off * r;
      }
      rebuild_kinematics(t, dt);
      candidates.push_back(std::move(t));
    }
  }
  // ResampleNudge: pursuit candidates aimed at the executed ego inside the
  // conflict window
  {
    double best_d = std::numeric_limits<double>::infinity();
    size_t best_k = 0;
    const size_t n = std::min(primary.states.size(), executed_ego.states.size());
    for (size_t k = 0; k < n; ++k) {
      const double time = static_cast<double>(k) * dt;
      if (time < guidance.window_start || time > guidance.window_end) {
        continue;
      }
      const double d = distance(primary.states[k].pos(), executed_ego.states[k].pos());
      if (d < best_d) {
        best_d = d;
        best_k = k;
      }
    }
    if (!std::isfinite(best_d)) {
      best_k = n / 2;
    }
    const double t_star = std::max(static_cast<double>(best_k) * dt, 0.5);
    const VehicleState& aim = executed_ego.states[best_k];
    const double kappa_max = max_curvature(scene, primary.vehicle_id);
    const double factors[] = {0.9, 1.0, 1.1, 1.2};
    const double aims[] = {-0.3, 0.3};
    for (double f : factors) {
      for (double lat : aims) {
        const Vec2 normal{-std::sin(aim.theta), std::cos(aim.theta)};
        const Vec2 target = aim.pos() + normal * lat;
        candidates.push_back(pursuit_to_point(scene, *track, target, t_star * f, kappa_max));
      }
    }
  }

  const double original_score = refine_score(primary, executed_ego, scene, size, guidance);
  double best_score = original_score;
  const Trajectory* best = nullptr;
  size_t rejected = 0;
  for (const Trajectory& cand : candidates) {
    const GateReport r = check_trajectory(cand, scene, settings.limits, adversary_ids, size,
                                          settings.full_footprint_road);
    if (!settings.gates.passes(r)) {
      ++rejected;
      continue;
    }
    const double s = refine_score(cand, executed_ego, scene, size, guidance);
    if (s > best_score) {
      best_score = s;
      best = &cand;
    }
  }
  if (rejected == candidates.size()) {
    out.all_rejected = true;
    return out;
  }
  if (best != nullptr) {
    out.traj = *best;
    out.refined = true;
  }
  return out;
}

}  // namespace advgen
