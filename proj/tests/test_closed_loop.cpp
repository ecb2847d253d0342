#include <doctest.h>

#include <cmath>

#include "advgen/closed_loop.hpp"
#include "advgen/rng.hpp"
#include "advgen/synthetic.hpp"
#include "support/builders.hpp"

using namespace advgen;
using advgen::testing::make_track;
using advgen::testing::straight_road_scene;

namespace {

Trajectory to_traj(const Track& t, int frames) {
  return Trajectory{t.vehicle_id, std::vector<VehicleState>(t.states.begin(),
                                                            t.states.begin() + frames)};
}

GenerationGuidance window(double t_a, double t_b) {
  GenerationGuidance g;
  g.window_start = t_a;
  g.window_end = t_b;
  return g;
}

Guidance guidance_for(const Scene& scene) {
  RuleExpert expert;
  return expert.infer(scene, shortlist(scene, 6), builtin_knowledge_base());
}

}  // namespace

TEST_CASE("rollout against replay cannot react") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {15.0, 0.0}, 0.0, 6.0, 90, s.dt)};
  // a primary built to stop dead in the replay path
  Track blocker = make_track(1, {15.0, 0.0}, 0.0, 6.0, 90, s.dt, -3.0);
  const std::vector<Trajectory> advs = {to_traj(blocker, 80)};
  ControllerSpec replay;
  const GenerationGuidance g = window(0.5, 6.0);
  const Feedback fb = rollout(s, advs, replay, DynLimits{}, &g);
  CHECK(fb.collided);
  CHECK(fb.d_min == 0.0);
  CHECK(fb.failure == FailureType::none_collided);
  CHECK(fb.collision_frame >= 0);
  CHECK(fb.collider_ids == std::vector<int>{1});
}

TEST_CASE("benign adversaries against a reactive ego do not collide") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {30.0, 0.0}, 0.0, 11.0, 90, s.dt)};
  const std::vector<Trajectory> advs = {replay_trajectory(s, s.others[0])};
  ControllerSpec idm;
  idm.kind = ControllerKind::idm;
  const GenerationGuidance g = window(1.0, 5.0);
  const Feedback fb = rollout(s, advs, idm, DynLimits{}, &g);
  CHECK_FALSE(fb.collided);
  CHECK(fb.failure != FailureType::none_collided);
  CHECK(fb.d_min > 1.5);
}

TEST_CASE("classify_failure rule ordering") {
  Scene s = straight_road_scene(10.0);
  const LoopConfig loop;

  SUBCASE("sub-threshold clearance is a near miss") {
    Feedback fb;
    fb.executed_ego = replay_trajectory(s, s.ego);
    fb.d_min = 0.8;
    CHECK(classify_failure(fb, s, window(1.0, 5.0), loop) == FailureType::near_miss);
  }
  SUBCASE("hard braking before the window is an early-brake escape") {
    Feedback fb;
    fb.executed_ego = replay_trajectory(s, s.ego);
    for (size_t k = 5; k < 15; ++k) {
      fb.executed_ego.states[k].a = -5.0;
    }
    fb.d_min = 4.0;
    CHECK(classify_failure(fb, s, window(3.5, 6.0), loop) == FailureType::early_brake_escape);
  }
  SUBCASE("lateral deviation beyond 1 m is a steering escape") {
    Feedback fb;
    fb.executed_ego = replay_trajectory(s, s.ego);
    for (size_t k = 30; k < 60; ++k) {
      fb.executed_ego.states[k].y += 2.0;
    }
    fb.d_min = 4.0;
    CHECK(classify_failure(fb, s, window(1.0, 5.0), loop) == FailureType::steer_escape);
  }
  SUBCASE("no brake, no swerve, late arrival is a timing mismatch") {
    Feedback fb;
    fb.executed_ego = replay_trajectory(s, s.ego);
    fb.d_min = 4.0;
    // neither the brake rule nor the steer rule fires on the clean replay
    for (const VehicleState& st : fb.executed_ego.states) {
      CHECK(st.a > -loop.brake_escape_decel);
    }
    CHECK(classify_failure(fb, s, window(1.0, 5.0), loop) == FailureType::timing_mismatch);
  }
  SUBCASE("collided runs cannot be classified") {
    Feedback fb;
    fb.executed_ego = replay_trajectory(s, s.ego);
    fb.collided = true;
    fb.d_min = 0.0;
    CHECK_THROWS_AS((void)classify_failure(fb, s, window(1.0, 5.0), loop), std::logic_error);
  }
}

TEST_CASE("failure types map onto their retry profiles") {
  CHECK(map_retry_profile(FailureType::timing_mismatch).kind == RetryProfileKind::timing_sync);
  CHECK(map_retry_profile(FailureType::steer_escape).kind == RetryProfileKind::steering_trap);
  CHECK(map_retry_profile(FailureType::early_brake_escape).kind ==
        RetryProfileKind::brake_delay_pressure);
  CHECK(map_retry_profile(FailureType::near_miss).kind == RetryProfileKind::near_miss_push);
  // documented adjustments
  CHECK(map_retry_profile(FailureType::early_brake_escape).window_start_shift ==
        doctest::Approx(0.5));
  CHECK(map_retry_profile(FailureType::near_miss).proxy_scale == doctest::Approx(1.0));
  CHECK(*map_retry_profile(FailureType::steer_escape).boosted_role == SupportRole::blocker);
  CHECK(*map_retry_profile(FailureType::early_brake_escape).boosted_role ==
        SupportRole::rear_pressure);
}

TEST_CASE("apply_profile shifts and recenters the window inside the horizon") {
  Guidance g;
  g.primary_id = 1;
  g.guidance = window(1.0, 3.0);

  RetryProfile shift = map_retry_profile(FailureType::early_brake_escape);
  const Guidance shifted = apply_profile(g, shift, 8.0);
  CHECK(shifted.guidance.window_start == doctest::Approx(1.5));
  CHECK(shifted.guidance.window_end == doctest::Approx(3.0));

  RetryProfile recenter = map_retry_profile(FailureType::timing_mismatch);
  recenter.recenter_time = 6.0;
  const Guidance centered = apply_profile(g, recenter, 8.0);
  CHECK(centered.guidance.window_start == doctest::Approx(5.0));
  CHECK(centered.guidance.window_end == doctest::Approx(7.0));

  recenter.recenter_time = 20.0;  // clamped into the horizon
  const Guidance clamped = apply_profile(g, recenter, 8.0);
  CHECK(clamped.guidance.window_end <= 8.0);
  CHECK(clamped.guidance.window_start < clamped.guidance.window_end);
}

TEST_CASE("terminal_refine") {
  EngineSettings settings;

  SUBCASE("an already-colliding original is retained") {
    Scene s = straight_road_scene(10.0);
    s.others = {make_track(1, {2.0, 0.0}, 0.0, 10.0, 90, s.dt)};
    const Trajectory ego_exec = replay_trajectory(s, s.ego);
    Trajectory primary = to_traj(make_track(1, {2.0, 0.0}, 0.0, 10.0, 90, s.dt), 80);
    const RefineResult r = terminal_refine(primary, ego_exec, s, settings, window(0.0, 2.0), {1},
                                           99);
    CHECK_FALSE(r.refined);
    CHECK(r.traj.states[40].x == doctest::Approx(primary.states[40].x));
  }

  SUBCASE("a lateral nudge toward the escaped ego wins on collision proxy") {
    Scene s = straight_road_scene(10.0);
    s.others = {make_track(1, {10.0, 0.0}, 0.0, 10.0, 90, s.dt)};
    // executed ego runs parallel, 0.9 m of clearance to the primary's right
    Trajectory ego_exec = to_traj(make_track(0, {10.0, -2.9}, 0.0, 10.0, 90, s.dt), 80);
    Trajectory primary = to_traj(make_track(1, {10.0, 0.0}, 0.0, 10.0, 90, s.dt), 80);
    const double before = min_pairwise_distance(primary, ego_exec, {4.5, 2.0}, s.ego.size);
    REQUIRE(before == doctest::Approx(0.9));
    const RefineResult r = terminal_refine(primary, ego_exec, s, settings, window(3.0, 7.0), {1},
                                           99);
    CHECK(r.refined);
    const double after = min_pairwise_distance(r.traj, ego_exec, {4.5, 2.0}, s.ego.size);
    CHECK(after < before);
    // refined output still satisfies the gates it was filtered by
    const GateReport gate = check_trajectory(r.traj, s, settings.limits, {1}, {4.5, 2.0});
    CHECK(settings.gates.passes(gate));
  }
}

TEST_CASE("run_closed_loop round accounting") {
  ControllerSpec replay;
  EngineSettings settings;

  SUBCASE("a round-0 collision ends the loop after one rollout") {
    const Scene s = make_scene(SceneTemplate::crossing, hash_combine(3, 1), "hit");
    const Guidance g = guidance_for(s);
    const ClosedLoopResult r = run_closed_loop(s, g, replay, settings, 77);
    REQUIRE(r.rounds.size() == 1);
    CHECK(r.best_feedback.collided);
    CHECK(r.best_round == 0);
  }

  SUBCASE("r_max = 0 is the single-round baseline") {
    const Scene s = make_scene(SceneTemplate::crossing_signal, hash_combine(3, 3), "blocked");
    const Guidance g = guidance_for(s);
    settings.loop.r_max = 0;
    const ClosedLoopResult r = run_closed_loop(s, g, replay, settings, 77);
    int generation_rounds = 0;
    for (const RoundLog& log : r.rounds) {
      if (log.profile != RetryProfileKind::terminal_refine) {
        ++generation_rounds;
      }
    }
    CHECK(generation_rounds == 1);
  }

  SUBCASE("five non-colliding rounds trigger terminal refinement exactly once, at the end") {
    const Scene s = make_scene(SceneTemplate::crossing_signal, hash_combine(3, 3), "blocked");
    const Guidance g = guidance_for(s);
    settings.loop.r_max = 5;
    const ClosedLoopResult r = run_closed_loop(s, g, replay, settings, 77);
    int refine_entries = 0;
    for (const RoundLog& log : r.rounds) {
      if (log.profile == RetryProfileKind::terminal_refine) {
        ++refine_entries;
        CHECK(&log == &r.rounds.back());
      } else {
        CHECK_FALSE(log.feedback.collided);
      }
    }
    CHECK(refine_entries == 1);
  }

  SUBCASE("invalid guidance is rejected before round 0") {
    const Scene s = make_scene(SceneTemplate::crossing, hash_combine(3, 1), "hit");
    Guidance g = guidance_for(s);
    g.support_ids.push_back(g.primary_id);  // violates the invariants
    CHECK_THROWS_AS((void)run_closed_loop(s, g, replay, settings, 77), std::invalid_argument);
  }
}

TEST_CASE("recovery monotonicity: more rounds never hurt") {
  for (auto kind : {ControllerKind::replay, ControllerKind::idm, ControllerKind::cruise}) {
    for (uint64_t i = 0; i < 4; ++i) {
      const Scene s = make_scene(i % 2 == 0 ? SceneTemplate::crossing : SceneTemplate::following,
                                 hash_combine(21, i), "mono");
      const Guidance g = guidance_for(s);
      ControllerSpec controller;
      controller.kind = kind;
      EngineSettings base;
      base.loop.r_max = 0;
      EngineSettings evo;
      evo.loop.r_max = 5;
      const ClosedLoopResult r0 = run_closed_loop(s, g, controller, base, 1234);
      const ClosedLoopResult r5 = run_closed_loop(s, g, controller, evo, 1234);
      if (r0.best_round >= 0 && r5.best_round >= 0) {
        CHECK(r5.best_j >= r0.best_j - 1e-12);
      }
      if (r0.best_round >= 0 && r0.best_feedback.collided) {
        CHECK(r5.best_feedback.collided);
      }
    }
  }
}

TEST_CASE("fixed seeds give bit-identical feedback logs") {
  const Scene s = make_scene(SceneTemplate::crossing, hash_combine(3, 6), "det");
  const Guidance g = guidance_for(s);
  ControllerSpec idm;
  idm.kind = ControllerKind::idm;
  const EngineSettings settings;
  const ClosedLoopResult a = run_closed_loop(s, g, idm, settings, 555);
  const ClosedLoopResult b = run_closed_loop(s, g, idm, settings, 555);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (size_t i = 0; i < a.rounds.size(); ++i) {
    CHECK(a.rounds[i].j_cl == b.rounds[i].j_cl);
    CHECK(a.rounds[i].feedback.d_min == b.rounds[i].feedback.d_min);
    CHECK(a.rounds[i].feedback.collided == b.rounds[i].feedback.collided);
    REQUIRE(a.rounds[i].feedback.executed_ego.states.size() ==
            b.rounds[i].feedback.executed_ego.states.size());
    for (size_t k = 0; k < a.rounds[i].feedback.executed_ego.states.size(); ++k) {
      CHECK(a.rounds[i].feedback.executed_ego.states[k].x ==
            b.rounds[i].feedback.executed_ego.states[k].x);
      CHECK(a.rounds[i].feedback.executed_ego.states[k].y ==
            b.rounds[i].feedback.executed_ego.states[k].y);
    }
  }
}
