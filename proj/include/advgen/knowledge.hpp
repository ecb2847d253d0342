#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advgen/scene_features.hpp"

namespace advgen {

// Declaration order is the tie-break order everywhere a mode comparison ties.
enum class CollisionMode { rear_end, crossing, cut_in, merge, head_on, turning, vru };
constexpr int kCollisionModeCount = 7;

const char* to_string(CollisionMode m);
std::optional<CollisionMode> mode_from_string(const std::string& s);

enum class FitLevel { high, medium, low };

const char* to_string(FitLevel f);
std::optional<FitLevel> fit_from_string(const std::string& s);

enum class SupportRole { blocker, rear_pressure, merge_interferer, timing_shaper };
constexpr int kSupportRoleCount = 4;

const char* to_string(SupportRole r);
std::optional<SupportRole> role_from_string(const std::string& s);

// Multiplicative biases over the trajectory-ranking features. Names are the
// contract; values are nonnegative.
struct ScoringBias {
  double collision_proxy = 1.0;
  double mode_consistency = 1.0;
  double window_match = 1.0;
  double zone_match = 1.0;
  double pressure = 1.0;
  double role_consistency = 1.0;
  double timing = 1.0;
  double naturalness = 1.0;
  double distinctiveness = 1.0;
};

struct GenerationGuidance {
  RelativeZone conflict_zone = RelativeZone::front;
  double window_start = 0.0;  // seconds after the decision frame
  double window_end = 4.0;
  std::vector<TriggerBehavior> behavior_priority;
  ScoringBias scoring_bias;
};

// Scene predicate attached to a knowledge entry.
struct SceneCondition {
  RoadTopology topology = RoadTopology::any;
  int min_vehicles = 1;
};

struct KnowledgeEntry {
  CollisionMode mode = CollisionMode::rear_end;
  SceneCondition condition;
  RelativeZone conflict_zone = RelativeZone::front;
  TriggerBehavior trigger = TriggerBehavior::hard_brake;
  GenerationGuidance guidance_template;
  FitLevel fit = FitLevel::medium;
};

struct KnowledgeBase {
  std::vector<KnowledgeEntry> entries;
  std::string version = "unversioned";
};

// Structured output of the collision expert.
struct Guidance {
  CollisionMode mode = CollisionMode::rear_end;
  int primary_id = -1;
  std::vector<int> support_ids;
  std::map<int, SupportRole> roles;
  GenerationGuidance guidance;
  bool single_collider_intent = true;
};

// Weighted indicator sum over five scene features; deterministic, in [0, 1].
// Weights: topology 0.25, zone occupancy 0.25, motion trend 0.20, window
// feasibility 0.20, behavior prior 0.10.
double kb_match(const Scene& scene, const KnowledgeEntry& entry);

// Modes sorted by best entry score descending; ties resolved by declaration
// order, independent of KB entry order.
std::vector<std::pair<CollisionMode, double>> retrieve_mode(const Scene& scene,
                                                            const KnowledgeBase& kb);

// Best-scoring entry of the given mode (tie: first in declaration-stable
// scan); nullptr when the KB has no entry for it.
const KnowledgeEntry* best_entry_for_mode(const Scene& scene, const KnowledgeBase& kb,
                                          CollisionMode mode);

// Enumerates violated Guidance invariants; empty result means valid. The
// shortlist is the set of ids the expert was allowed to pick from.
std::vector<std::string> validate_guidance(const Guidance& g, const std::vector<int>& shortlist,
                                           double horizon_seconds);

// JSON (de)serialization shared by the KB file, the remote-expert protocol,
// and scenario artifacts.
nlohmann::json guidance_to_json(const Guidance& g);
std::optional<Guidance> guidance_from_json(const nlohmann::json& j, std::string* error);
nlohmann::json kb_to_json(const KnowledgeBase& kb);
KnowledgeBase kb_from_json(const nlohmann::json& j);
KnowledgeBase load_knowledge_base(const std::string& path);

// The KB shipped with the engine: at least one entry per collision mode.
KnowledgeBase builtin_knowledge_base();

}  // namespace advgen
