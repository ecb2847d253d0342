#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "advgen/controllers.hpp"
#include "advgen/expert.hpp"
#include "advgen/gates.hpp"
#include "advgen/lattice.hpp"

namespace advgen {

enum class FailureType {
  none_collided,  // the run collided; there is no escape to classify
  early_brake_escape,
  steer_escape,
  timing_mismatch,
  near_miss
};

const char* to_string(FailureType f);

struct Feedback {
  Trajectory executed_ego;
  bool collided = false;
  double d_min = 0.0;  // clearance to the adversary set; 0 when collided
  FailureType failure = FailureType::none_collided;
  int collision_frame = -1;
  std::vector<int> collider_ids;  // adversaries overlapping at the collision frame
};

enum class RetryProfileKind {
  neutral,
  timing_sync,
  steering_trap,
  brake_delay_pressure,
  near_miss_push,
  terminal_refine
};

const char* to_string(RetryProfileKind k);

struct RetryProfile {
  RetryProfileKind kind = RetryProfileKind::neutral;
  double window_start_shift = 0.0;
  std::optional<double> recenter_time;   // timing_sync
  double proxy_scale = 2.0;              // near_miss_push tightens this to 1
  std::optional<SupportRole> boosted_role;
  double role_boost = 1.0;
  int escape_side = 0;                   // +1 left, -1 right (steering_trap)
};

struct LoopConfig {
  int r_max = 5;
  int n_rollout_buffer = 5;
  double alpha_discount = 0.99;
  // collision, proximity, rule compliance, naturalness
  std::array<double, 4> jcl_weights = {0.6, 0.2, 0.1, 0.1};
  // failure classification thresholds
  double near_miss_dist = 1.5;      // m
  double brake_escape_decel = 3.0;  // m/s^2
  double steer_escape_dev = 1.0;    // m
};

struct EngineSettings {
  RankingParams ranking;
  TrajRankWeights traj_weights;
  DynLimits limits;
  GateToggles gates;
  LoopConfig loop;
  int candidates_m = 32;
  bool full_footprint_road = false;
};

// Forward-simulates the ego under the controller while adversaries follow
// their trajectories and background vehicles replay their logs. The failure
// type is classified when the run does not collide (guidance supplies the
// conflict window; without it the whole horizon is used).
Feedback rollout(const Scene& scene, const std::vector<Trajectory>& adversaries,
                 const ControllerSpec& controller, const DynLimits& limits,
                 const GenerationGuidance* guidance = nullptr,
                 const LoopConfig& loop = LoopConfig{});

// Classification of a non-collided run; throws std::logic_error on a collided
// feedback.
FailureType classify_failure(const Feedback& feedback, const Scene& scene,
                             const GenerationGuidance& guidance, const LoopConfig& loop);

// Static part of the failure -> profile mapping; the loop fills in
// recenter_time (timing_sync) and escape_side (steering_trap).
RetryProfile map_retry_profile(FailureType failure);

// Guidance with the profile's window and bias adjustments applied.
Guidance apply_profile(const Guidance& guidance, const RetryProfile& profile,
                       double horizon_seconds);

struct RefineResult {
  Trajectory traj;
  bool refined = false;       // a candidate beat the original
  bool all_rejected = false;  // every refinement candidate failed the gates
};

// Last-round terminal refinement: small legal nudges of the trajectory tail
// plus re-targeted pursuit candidates aimed at the executed ego, re-gated and
// ranked against the executed ego.
RefineResult terminal_refine(const Trajectory& primary, const Trajectory& executed_ego,
                             const Scene& scene, const EngineSettings& settings,
                             const GenerationGuidance& guidance,
                             const std::vector<int>& adversary_ids, uint64_t seed);

struct RoundLog {
  int round = 0;
  RetryProfileKind profile = RetryProfileKind::neutral;
  bool generated = false;
  std::string reject_reason;
  ScenarioGateReport gates;
  std::vector<Trajectory> adversaries;  // primary first
  Feedback feedback;
  AttributionReport attribution;
  bool attribution_clean = true;
  double j_cl = 0.0;
  bool is_best = false;
  bool terminal_refined = false;
};

struct ClosedLoopResult {
  bool feasible = false;  // at least one round produced a gated scenario
  std::vector<Trajectory> best_adversaries;
  ScenarioGateReport best_gates;
  Feedback best_feedback;
  AttributionReport best_attribution;
  int best_round = -1;
  double best_j = 0.0;
  std::vector<RoundLog> rounds;
};

// Controller-conditioned regeneration: up to r_max retry rounds after the
// neutral round 0, early exit on a clean collision, terminal refinement on
// the final non-collided round. The controller spec is never modified.
ClosedLoopResult run_closed_loop(const Scene& scene, const Guidance& guidance,
                                 const ControllerSpec& controller, const EngineSettings& settings,
                                 uint64_t scene_seed);

double closed_loop_score(const Feedback& feedback, const ScenarioGateReport& gates,
                         const std::vector<Trajectory>& adversaries, double dt, int round,
                         const LoopConfig& loop, double jerk_cap);

}  // namespace advgen
