#pragma once

#include <array>
#include <vector>

#include "advgen/knowledge.hpp"

namespace advgen {

// Composite pre-screening risk over interaction relevance, intention
// uncertainty, collision probability and consequence. All components and the
// total live in [0, 1].
struct RiskScore {
  int vehicle_id = -1;
  double relevance = 0.0;
  double uncertainty = 0.0;
  double collision_prob = 0.0;
  double consequence = 0.0;
  double total = 0.0;
};

struct RankingParams {
  std::array<double, 3> primary_weights = {0.3, 0.4, 0.3};        // dist, risk, mode match
  std::array<double, 4> support_weights = {0.3, 0.3, 0.2, 0.35};  // role, geo, time, overlap
  int k_shortlist = 6;
  int m_supports_max = 2;
  double overlap_penalty = 0.35;   // weight of the corridor-overlap penalty
  double corridor_margin = 0.75;   // meters
};

struct PrimaryFeatures {
  double dist_risk = 0.0;  // 1 / (1 + gap/20)
  double risk_total = 0.0;
  double ce_match = 0.0;   // expert/KB mode match for the chosen mode
};

struct SupportFeatures {
  double role_match = 0.0;
  double geo_pressure = 0.0;
  double time_compat = 0.0;
  double corridor_overlap = 0.0;  // penalized
};

struct ShortlistCandidate {
  int vehicle_id = -1;
  RiskScore risk;
  double dist_risk = 0.0;
};

// Throws std::invalid_argument when the vehicle lacks valid observation
// frames.
RiskScore assess_risk(const Scene& scene, int vehicle_id);

// Top-k by total descending, ties by vehicle id ascending; stable under
// input-order permutations.
std::vector<ShortlistCandidate> shortlist(const Scene& scene, int k);

// argmax of primary_weights . (dist_risk, risk_total, ce_match); ties by id.
int select_primary(const std::vector<std::pair<int, PrimaryFeatures>>& candidates,
                   const RankingParams& params);

SupportFeatures support_features(const Scene& scene, int vehicle_id, int primary_id,
                                 const GenerationGuidance& guidance, const RankingParams& params);

// Best-fitting role for the candidate together with its match strength.
std::pair<SupportRole, double> best_role(const Scene& scene, int vehicle_id);

// At most two (id, role) pairs; candidates whose support score is <= 0 are
// dropped. May return fewer or none.
std::vector<std::pair<int, SupportRole>> select_supports(const std::vector<int>& candidate_ids,
                                                         int primary_id, const Scene& scene,
                                                         const GenerationGuidance& guidance,
                                                         const RankingParams& params);

double support_score(const SupportFeatures& f, const RankingParams& params);

// Frame-0 box clearance mapped through 1 / (1 + d/20).
double distance_risk(const Scene& scene, int vehicle_id);

}  // namespace advgen
