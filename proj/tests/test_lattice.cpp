#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advgen/lattice.hpp"
#include "advgen/synthetic.hpp"
#include "support/builders.hpp"

using namespace advgen;
using advgen::testing::make_track;
using advgen::testing::straight_road_scene;

namespace {

Trajectory track_to_traj(const Track& t, int frames) {
  Trajectory out;
  out.vehicle_id = t.vehicle_id;
  out.states.assign(t.states.begin(), t.states.begin() + frames);
  return out;
}

Guidance basic_guidance(CollisionMode mode, RelativeZone zone, double t_a, double t_b) {
  Guidance g;
  g.mode = mode;
  g.primary_id = 1;
  g.guidance.conflict_zone = zone;
  g.guidance.window_start = t_a;
  g.guidance.window_end = t_b;
  return g;
}

}  // namespace

TEST_CASE("generate_candidates produces m continuity-valid, curvature-bounded rollouts") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {20.0, 0.0}, 0.0, 9.0, 90, s.dt)};
  const CandidateSet set = generate_candidates(s, 1, 32, 7);
  CHECK(set.candidates.size() == 32);
  const VehicleState& cur = s.current_state(*s.track_by_id(1));
  const double kappa_max = max_curvature(s, 1);
  for (const Candidate& c : set.candidates) {
    REQUIRE(c.traj.states.size() == static_cast<size_t>(s.t_pred_frames));
    // start-state continuity: candidates begin at the decision-frame state
    CHECK(c.traj.states[0].x == doctest::Approx(cur.x));
    CHECK(c.traj.states[0].y == doctest::Approx(cur.y));
    CHECK(c.traj.states[0].theta == doctest::Approx(cur.theta));
    CHECK(std::fabs(c.traj.states[0].v - cur.v) <= 0.5);
    // curvature bound from finite differences
    for (size_t k = 0; k + 1 < c.traj.states.size(); ++k) {
      const double step = distance(c.traj.states[k].pos(), c.traj.states[k + 1].pos());
      if (step < 1e-6) {
        continue;
      }
      const double dtheta =
          std::fabs(wrap_angle(c.traj.states[k + 1].theta - c.traj.states[k].theta));
      CHECK(dtheta / step <= kappa_max * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("stationary pedestrian gets the degenerate candidate pair") {
  Scene s = straight_road_scene(10.0);
  Track ped = make_track(1, {20.0, 1.0}, kPi / 2.0, 0.0, 90, s.dt, 0.0, {0.6, 0.6},
                         VehicleCategory::pedestrian);
  s.others = {ped};
  const CandidateSet set = generate_candidates(s, 1, 32, 7);
  REQUIRE(set.candidates.size() == 2);
  CHECK(set.candidates[0].tag == Maneuver::keep_lane);
  CHECK(set.candidates[1].tag == Maneuver::stop);
}

TEST_CASE("m = 1 keeps the neutral keep-lane hold candidate") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {20.0, 0.0}, 0.0, 9.0, 90, s.dt)};
  const CandidateSet set = generate_candidates(s, 1, 1, 7);
  REQUIRE(set.candidates.size() == 1);
  CHECK(set.candidates[0].tag == Maneuver::keep_lane);
  // hold profile: terminal speed equals the starting speed
  CHECK(set.candidates[0].traj.states.back().v == doctest::Approx(9.0).epsilon(0.01));
}

TEST_CASE("off-map vehicles fall back to the degenerate set") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {20.0, 40.0}, 0.0, 5.0, 90, s.dt)};
  const CandidateSet set = generate_candidates(s, 1, 32, 7);
  CHECK(set.candidates.size() == 2);
}

TEST_CASE("rank_primary component behavior") {
  const double dt = 0.1;
  const int frames = 80;
  const BoxSize size{4.5, 2.0};
  const Track ego_track = make_track(0, {0, 0}, 0.0, 10.0, frames, dt);
  const Trajectory ego_ref = track_to_traj(ego_track, frames);

  SUBCASE("saturating candidate scores exactly 1") {
    // crossing trajectory through the ego position; window centered on the
    // first overlap so every component saturates
    const Track cross = make_track(1, {20.0, -16.0}, kPi / 2.0, 8.0, frames, dt);
    Candidate c{track_to_traj(cross, frames), Maneuver::cross};
    // locate the first overlap
    int hit = -1;
    for (int k = 0; k < frames; ++k) {
      if (boxes_collide(state_box(c.traj.states[k], size), state_box(ego_ref.states[k], size))) {
        hit = k;
        break;
      }
    }
    REQUIRE(hit > 0);
    const double t_hit = hit * dt;
    Guidance g = basic_guidance(CollisionMode::crossing, RelativeZone::crossing_zone,
                                t_hit - 1.0, t_hit + 1.0);
    const auto ranked = rank_primary({c}, g, ego_ref, size, size, dt, TrajRankWeights{});
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].score.collision_proxy == doctest::Approx(1.0));
    CHECK(ranked[0].score.mode_consistency == doctest::Approx(1.0));
    CHECK(ranked[0].score.window_match == doctest::Approx(1.0));
    CHECK(ranked[0].score.zone_match == doctest::Approx(1.0));
    CHECK(ranked[0].score.total == doctest::Approx(1.0));
  }

  SUBCASE("proximity is monotone: d_min 0 outranks d_min 10") {
    const Track hit = make_track(1, {15.0, 0.0}, 0.0, 6.0, frames, dt);      // gets caught
    const Track miss = make_track(2, {15.0, 12.0}, 0.0, 10.0, frames, dt);   // parallel, far
    Candidate a{track_to_traj(hit, frames), Maneuver::brake};
    Candidate b{track_to_traj(miss, frames), Maneuver::brake};
    Guidance g = basic_guidance(CollisionMode::rear_end, RelativeZone::front, 0.0, 8.0);
    const auto ranked = rank_primary({b, a}, g, ego_ref, size, size, dt, TrajRankWeights{});
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].index == 1);  // the colliding candidate
    CHECK(ranked[0].score.collision_proxy > ranked[1].score.collision_proxy);
  }

  SUBCASE("window kernel is higher at the center than at the edge") {
    Guidance g = basic_guidance(CollisionMode::rear_end, RelativeZone::front, 2.0, 6.0);
    CHECK(window_kernel(4.0, 2.0, 6.0) == doctest::Approx(1.0));
    CHECK(window_kernel(2.0, 2.0, 6.0) == doctest::Approx(0.0));
    CHECK(window_kernel(3.0, 2.0, 6.0) > window_kernel(2.2, 2.0, 6.0));
    (void)g;
  }

  SUBCASE("zeroing all biases except collision_proxy reduces to d_min ordering") {
    std::vector<Candidate> cands;
    for (int i = 0; i < 6; ++i) {
      const Track t = make_track(10 + i, {15.0, 2.0 + 2.5 * i}, 0.0, 10.0, frames, dt);
      cands.push_back({track_to_traj(t, frames), static_cast<Maneuver>(i % 8)});
    }
    Guidance g = basic_guidance(CollisionMode::crossing, RelativeZone::front_left, 1.0, 5.0);
    g.guidance.scoring_bias = ScoringBias{};
    g.guidance.scoring_bias.mode_consistency = 0.0;
    g.guidance.scoring_bias.window_match = 0.0;
    g.guidance.scoring_bias.zone_match = 0.0;
    const auto ranked = rank_primary(cands, g, ego_ref, size, size, dt, TrajRankWeights{});
    std::vector<double> dmins;
    for (const auto& rc : ranked) {
      dmins.push_back(min_pairwise_distance(cands[rc.index].traj, ego_ref, size, size));
    }
    CHECK(std::is_sorted(dmins.begin(), dmins.end()));
  }

  SUBCASE("empty candidate list throws") {
    Guidance g = basic_guidance(CollisionMode::rear_end, RelativeZone::front, 0.0, 8.0);
    CHECK_THROWS_AS((void)rank_primary({}, g, ego_ref, size, size, dt, TrajRankWeights{}),
                    std::invalid_argument);
  }
}

TEST_CASE("rank_support behavior") {
  const double dt = 0.1;
  const int frames = 80;
  const BoxSize size{4.5, 2.0};
  const Trajectory ego_ref = track_to_traj(make_track(0, {0, 0}, 0.0, 10.0, frames, dt), frames);
  const Trajectory primary =
      track_to_traj(make_track(1, {15.0, 10.0}, 0.0, 10.0, frames, dt), frames);
  Guidance g = basic_guidance(CollisionMode::rear_end, RelativeZone::front, 0.0, 8.0);
  RankingParams params;
  TrajRankWeights weights;

  SUBCASE("candidates colliding with the ego reference are excluded outright") {
    Candidate colliding{ego_ref, Maneuver::keep_lane};
    Candidate safe{track_to_traj(make_track(2, {0.0, 8.0}, 0.0, 10.0, frames, dt), frames),
                   Maneuver::keep_lane};
    const SupportRanking r =
        rank_support({colliding, safe}, g, SupportRole::timing_shaper, primary, ego_ref, size,
                     size, size, dt, params, weights);
    REQUIRE(r.ranked.size() == 1);
    CHECK(r.ranked[0].index == 1);
    CHECK_FALSE(r.support_infeasible);
  }

  SUBCASE("all candidates colliding yields support_infeasible") {
    Candidate colliding{ego_ref, Maneuver::keep_lane};
    const SupportRanking r =
        rank_support({colliding}, g, SupportRole::timing_shaper, primary, ego_ref, size, size,
                     size, dt, params, weights);
    CHECK(r.ranked.empty());
    CHECK(r.support_infeasible);
  }

  SUBCASE("near-but-no-contact outranks a comfortable gap on pressure") {
    // parallel paths 1.2 m and 8 m of clearance from the ego boxes
    Candidate near{track_to_traj(make_track(2, {0.0, 3.2}, 0.0, 10.0, frames, dt), frames),
                   Maneuver::keep_lane};
    Candidate far{track_to_traj(make_track(3, {0.0, 10.0}, 0.0, 10.0, frames, dt), frames),
                  Maneuver::keep_lane};
    const SupportRanking r = rank_support({far, near}, g, SupportRole::blocker, primary, ego_ref,
                                          size, size, size, dt, params, weights);
    REQUIRE(r.ranked.size() == 2);
    CHECK(r.ranked[0].index == 1);
  }

  SUBCASE("a disjoint corridor outranks one duplicating the primary") {
    Candidate duplicate{primary, Maneuver::keep_lane};
    Candidate disjoint{track_to_traj(make_track(3, {15.0, 14.0}, 0.0, 10.0, frames, dt), frames),
                       Maneuver::keep_lane};
    const SupportRanking r =
        rank_support({duplicate, disjoint}, g, SupportRole::timing_shaper, primary, ego_ref,
                     size, size, size, dt, params, weights);
    REQUIRE(r.ranked.size() == 2);
    CHECK(r.ranked[0].index == 1);
    CHECK(r.ranked[0].score.zone_match > r.ranked[1].score.zone_match);  // distinctiveness
  }

  SUBCASE("generated support rankings never contain an ego-colliding candidate") {
    Scene s = straight_road_scene(10.0);
    s.others = {make_track(1, {15.0, 0.0}, 0.0, 6.0, 90, s.dt),
                make_track(2, {2.0, 3.5}, 0.0, 10.0, 90, s.dt)};
    const Trajectory ref = replay_trajectory(s, s.ego);
    const CandidateSet set = generate_candidates(s, 2, 32, 3, &g.guidance);
    const SupportRanking r = rank_support(set.candidates, g, SupportRole::blocker, primary, ref,
                                          size, size, s.ego.size, dt, params, weights);
    for (const RankedCandidate& rc : r.ranked) {
      CHECK(min_pairwise_distance(set.candidates[rc.index].traj, ref, size, s.ego.size) > 0.0);
    }
  }
}

TEST_CASE("ranking totals are deterministic and permutation-stable") {
  const double dt = 0.1;
  const int frames = 80;
  const BoxSize size{4.5, 2.0};
  const Trajectory ego_ref = track_to_traj(make_track(0, {0, 0}, 0.0, 10.0, frames, dt), frames);
  Guidance g = basic_guidance(CollisionMode::rear_end, RelativeZone::front, 1.0, 5.0);
  std::vector<Candidate> cands;
  for (int i = 0; i < 8; ++i) {
    const Track t = make_track(10 + i, {12.0 + 3.0 * i, (i % 2) ? 3.5 : 0.0}, 0.0, 8.0, frames, dt);
    cands.push_back({track_to_traj(t, frames), Maneuver::brake});
  }
  const auto first = rank_primary(cands, g, ego_ref, size, size, dt, TrajRankWeights{});
  const auto second = rank_primary(cands, g, ego_ref, size, size, dt, TrajRankWeights{});
  REQUIRE(first.size() == second.size());
  for (size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].index == second[i].index);
    CHECK(first[i].score.total == second[i].score.total);
  }
  // reversed input: the multiset of totals is unchanged
  std::vector<Candidate> reversed(cands.rbegin(), cands.rend());
  auto r2 = rank_primary(reversed, g, ego_ref, size, size, dt, TrajRankWeights{});
  std::vector<double> t1, t2;
  for (const auto& rc : first) t1.push_back(rc.score.total);
  for (const auto& rc : r2) t2.push_back(rc.score.total);
  std::sort(t1.begin(), t1.end());
  std::sort(t2.begin(), t2.end());
  for (size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i] == doctest::Approx(t2[i]));
  }
}

TEST_CASE("trajectory naturalness penalizes jerk") {
  const double dt = 0.1;
  Trajectory smooth{1, {}};
  Trajectory jerky{2, {}};
  double v1 = 10.0, v2 = 10.0;
  for (int k = 0; k < 80; ++k) {
    smooth.states.push_back({0, 0, v1, 0, 0});
    jerky.states.push_back({0, 0, v2, 0, 0});
    v2 += (k % 2 == 0) ? 0.8 : -0.8;  // alternating acceleration: high jerk
  }
  CHECK(trajectory_naturalness(smooth, dt, 15.0) == doctest::Approx(1.0));
  CHECK(trajectory_naturalness(jerky, dt, 15.0) < 0.2);
}
