#pragma once

#include <cstdint>
#include <vector>

#include "advgen/knowledge.hpp"
#include "advgen/risk.hpp"

namespace advgen {

enum class Maneuver {
  keep_lane,
  lane_change_left,
  lane_change_right,
  brake,
  accelerate,
  cross,
  turn,
  stop
};

const char* to_string(Maneuver m);

struct Candidate {
  Trajectory traj;
  Maneuver tag = Maneuver::keep_lane;
};

struct CandidateSet {
  int vehicle_id = -1;
  std::vector<Candidate> candidates;
};

// Kinematic-bicycle rollouts over the prediction horizon: reachable lane
// targets x speed profiles {-6, -2, 0, +2} m/s^2 x terminal lateral offsets
// {-1, 0, +1} m, pruned to m candidates by farthest-point selection on the
// terminal pose (the neutral keep-lane/hold candidate is always kept first).
// Off-map vehicles and VRU categories get the degenerate
// {constant-velocity, full-stop} pair.
CandidateSet generate_candidates(const Scene& scene, int vehicle_id, int m, uint64_t seed,
                                 const GenerationGuidance* guidance = nullptr);

struct TrajScore {
  double collision_proxy = 0.0;
  double mode_consistency = 0.0;
  double window_match = 0.0;
  double zone_match = 0.0;
  double naturalness = 0.0;
  double total = 0.0;
};

struct TrajRankWeights {
  // primary ranking
  double primary_proxy = 0.45;
  double primary_mode = 0.20;
  double primary_window = 0.20;
  double primary_zone = 0.15;
  // support ranking
  double support_pressure = 0.30;
  double support_role = 0.25;
  double support_timing = 0.20;
  double support_natural = 0.10;
  double support_distinct = 0.15;
  // kernels
  double proxy_scale = 2.0;      // m, collision proxy exp(-d/scale)
  double pressure_offset = 1.0;  // m
  double pressure_scale = 3.0;   // m
  double jerk_cap = 15.0;        // m/s^3
};

struct RankedCandidate {
  size_t index = 0;
  TrajScore score;
};

// Descending by total; ties keep candidate order. Candidates are expected to
// be rule-gated already. Throws std::invalid_argument when empty.
std::vector<RankedCandidate> rank_primary(const std::vector<Candidate>& candidates,
                                          const Guidance& guidance, const Trajectory& ego_ref,
                                          const BoxSize& adv_size, const BoxSize& ego_size,
                                          double dt, const TrajRankWeights& weights);

struct SupportRanking {
  std::vector<RankedCandidate> ranked;
  bool support_infeasible = false;  // every candidate collided with the ego reference
};

// Candidates colliding with the ego reference are excluded before ranking
// (hard constraint). role_boost > 1 and escape_side != 0 come from retry
// profiles.
SupportRanking rank_support(const std::vector<Candidate>& candidates, const Guidance& guidance,
                            SupportRole role, const Trajectory& primary_traj,
                            const Trajectory& ego_ref, const BoxSize& adv_size,
                            const BoxSize& primary_size, const BoxSize& ego_size, double dt,
                            const RankingParams& params, const TrajRankWeights& weights,
                            double role_boost = 1.0, int escape_side = 0);

// Mean |jerk| mapped to [0, 1]: 1 - min(1, mean/cap).
double trajectory_naturalness(const Trajectory& traj, double dt, double jerk_cap);

// Fraction of trajectory points within `margin` of the other trajectory's
// path polyline.
double corridor_overlap_fraction(const Trajectory& traj, const Trajectory& reference,
                                 double margin);

double max_curvature(const Scene& scene, int vehicle_id);

}  // namespace advgen
