#include "advgen/knowledge.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "advgen/json_canonical.hpp"

namespace advgen {

namespace {

constexpr std::array<double, 5> kMatchWeights = {0.25, 0.25, 0.20, 0.20, 0.10};

}  // namespace

const char* to_string(CollisionMode m) {
  switch (m) {
    case CollisionMode::rear_end: return "rear_end";
    case CollisionMode::crossing: return "crossing";
    case CollisionMode::cut_in: return "cut_in";
    case CollisionMode::merge: return "merge";
    case CollisionMode::head_on: return "head_on";
    case CollisionMode::turning: return "turning";
    case CollisionMode::vru: return "vru";
  }
  return "rear_end";
}

std::optional<CollisionMode> mode_from_string(const std::string& s) {
  for (int i = 0; i < kCollisionModeCount; ++i) {
    const auto m = static_cast<CollisionMode>(i);
    if (s == to_string(m)) {
      return m;
    }
  }
  return std::nullopt;
}

const char* to_string(FitLevel f) {
  switch (f) {
    case FitLevel::high: return "high";
    case FitLevel::medium: return "medium";
    case FitLevel::low: return "low";
  }
  return "medium";
}

std::optional<FitLevel> fit_from_string(const std::string& s) {
  if (s == "high") return FitLevel::high;
  if (s == "medium") return FitLevel::medium;
  if (s == "low") return FitLevel::low;
  return std::nullopt;
}

const char* to_string(SupportRole r) {
  switch (r) {
    case SupportRole::blocker: return "blocker";
    case SupportRole::rear_pressure: return "rear_pressure";
    case SupportRole::merge_interferer: return "merge_interferer";
    case SupportRole::timing_shaper: return "timing_shaper";
  }
  return "blocker";
}

std::optional<SupportRole> role_from_string(const std::string& s) {
  for (int i = 0; i < kSupportRoleCount; ++i) {
    const auto r = static_cast<SupportRole>(i);
    if (s == to_string(r)) {
      return r;
    }
  }
  return std::nullopt;
}

double kb_match(const Scene& scene, const KnowledgeEntry& entry) {
  if (scene.others.empty()) {
    throw std::invalid_argument("kb_match: scene has no non-ego vehicles");
  }
  const int decision = scene.decision_frame();
  std::vector<int> present;
  for (const Track& t : scene.others) {
    if (t.valid_at(static_cast<size_t>(decision))) {
      present.push_back(t.vehicle_id);
    }
  }

  // 1. road topology
  double topology = 0.0;
  if (entry.condition.topology == RoadTopology::any ||
      entry.condition.topology == detect_topology(scene.map)) {
    topology = 1.0;
  }
  if (static_cast<int>(present.size()) < entry.condition.min_vehicles) {
    topology = 0.0;
  }

  // 2. someone occupies the entry's conflict zone
  double zone = 0.0;
  for (int id : present) {
    if (occupies_zone(scene, id, entry.conflict_zone)) {
      zone = 1.0;
      break;
    }
  }

  // 3. motion trend consistent with the trigger
  double trend = 0.0;
  for (int id : present) {
    if (trigger_trend_match(scene, id, entry.trigger)) {
      trend = 1.0;
      break;
    }
  }

  // 4. arrival overlap inside the template window
  double window = 0.0;
  for (int id : present) {
    const ConflictEstimate c = estimate_conflict(scene, id);
    if (!c.exists) {
      continue;
    }
    const double mid = 0.5 * (c.t_ego + c.t_vehicle);
    if (std::fabs(c.t_ego - c.t_vehicle) <= 2.0 &&
        mid >= entry.guidance_template.window_start &&
        mid <= entry.guidance_template.window_end) {
      window = 1.0;
      break;
    }
  }

  // 5. behavior prior
  double prior = 0.0;
  for (int id : present) {
    if (trigger_category_match(scene, id, entry.trigger)) {
      prior = 1.0;
      break;
    }
  }

  return kMatchWeights[0] * topology + kMatchWeights[1] * zone + kMatchWeights[2] * trend +
         kMatchWeights[3] * window + kMatchWeights[4] * prior;
}

std::vector<std::pair<CollisionMode, double>> retrieve_mode(const Scene& scene,
                                                            const KnowledgeBase& kb) {
  std::array<double, kCollisionModeCount> best;
  best.fill(-1.0);
  for (const KnowledgeEntry& e : kb.entries) {
    const double s = kb_match(scene, e);
    const int idx = static_cast<int>(e.mode);
    best[static_cast<size_t>(idx)] = std::max(best[static_cast<size_t>(idx)], s);
  }
  std::vector<std::pair<CollisionMode, double>> out;
  for (int i = 0; i < kCollisionModeCount; ++i) {
    if (best[static_cast<size_t>(i)] >= 0.0) {
      out.push_back({static_cast<CollisionMode>(i), best[static_cast<size_t>(i)]});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) {
      return a.second > b.second;
    }
    return static_cast<int>(a.first) < static_cast<int>(b.first);
  });
  return out;
}

const KnowledgeEntry* best_entry_for_mode(const Scene& scene, const KnowledgeBase& kb,
                                          CollisionMode mode) {
  const KnowledgeEntry* best = nullptr;
  double best_score = -1.0;
  for (const KnowledgeEntry& e : kb.entries) {
    if (e.mode != mode) {
      continue;
    }
    const double s = kb_match(scene, e);
    if (s > best_score) {
      best_score = s;
      best = &e;
    }
  }
  return best;
}

std::vector<std::string> validate_guidance(const Guidance& g, const std::vector<int>& shortlist,
                                           double horizon_seconds) {
  std::vector<std::string> violations;
  const auto in_shortlist = [&](int id) {
    return std::find(shortlist.begin(), shortlist.end(), id) != shortlist.end();
  };
  if (g.primary_id < 0) {
    violations.push_back("primary_id missing");
  } else if (!in_shortlist(g.primary_id)) {
    violations.push_back("primary_id not in shortlist");
  }
  if (g.support_ids.size() > 2) {
    violations.push_back("|B*| <= 2 violated");
  }
  for (int id : g.support_ids) {
    if (id == g.primary_id) {
      violations.push_back("support id equals primary id");
    }
    if (!in_shortlist(id)) {
      violations.push_back("support id " + std::to_string(id) + " not in shortlist");
    }
    if (!g.roles.count(id)) {
      violations.push_back("support id " + std::to_string(id) + " has no role");
    }
  }
  for (const auto& [id, role] : g.roles) {
    (void)role;
    if (std::find(g.support_ids.begin(), g.support_ids.end(), id) == g.support_ids.end()) {
      violations.push_back("role assigned to non-support id " + std::to_string(id));
    }
  }
  if (!(g.guidance.window_start >= 0.0 && g.guidance.window_start < g.guidance.window_end)) {
    violations.push_back("t_a < t_b violated");
  }
  if (g.guidance.window_end > horizon_seconds + 1e-9) {
    violations.push_back("time window exceeds horizon");
  }
  if (!g.single_collider_intent) {
    violations.push_back("single_collider_intent must be true");
  }
  return violations;
}

namespace {

using nlohmann::json;

json bias_to_json(const ScoringBias& b) {
  return json{{"collision_proxy", b.collision_proxy},
              {"mode_consistency", b.mode_consistency},
              {"window_match", b.window_match},
              {"zone_match", b.zone_match},
              {"pressure", b.pressure},
              {"role_consistency", b.role_consistency},
              {"timing", b.timing},
              {"naturalness", b.naturalness},
              {"distinctiveness", b.distinctiveness}};
}

ScoringBias bias_from_json(const json& j) {
  ScoringBias b;
  auto get = [&](const char* k, double& field) {
    if (j.contains(k) && j[k].is_number()) {
      field = std::max(0.0, j[k].get<double>());
    }
  };
  get("collision_proxy", b.collision_proxy);
  get("mode_consistency", b.mode_consistency);
  get("window_match", b.window_match);
  get("zone_match", b.zone_match);
  get("pressure", b.pressure);
  get("role_consistency", b.role_consistency);
  get("timing", b.timing);
  get("naturalness", b.naturalness);
  get("distinctiveness", b.distinctiveness);
  return b;
}

json generation_guidance_to_json(const GenerationGuidance& g) {
  json priorities = json::array();
  for (TriggerBehavior b : g.behavior_priority) {
    priorities.push_back(to_string(b));
  }
  return json{{"conflict_zone", to_string(g.conflict_zone)},
              {"time_window", json::array({g.window_start, g.window_end})},
              {"behavior_priority", std::move(priorities)},
              {"scoring_bias", bias_to_json(g.scoring_bias)}};
}

bool generation_guidance_from_json(const json& j, GenerationGuidance* out, std::string* error) {
  if (!j.is_object()) {
    *error = "guidance must be an object";
    return false;
  }
  if (!j.contains("conflict_zone") || !j["conflict_zone"].is_string()) {
    *error = "guidance.conflict_zone missing";
    return false;
  }
  const auto zone = zone_from_string(j["conflict_zone"].get<std::string>());
  if (!zone) {
    *error = "guidance.conflict_zone unknown";
    return false;
  }
  out->conflict_zone = *zone;
  if (!j.contains("time_window") || !j["time_window"].is_array() || j["time_window"].size() != 2) {
    *error = "guidance.time_window must be [t_a, t_b]";
    return false;
  }
  out->window_start = j["time_window"][0].get<double>();
  out->window_end = j["time_window"][1].get<double>();
  out->behavior_priority.clear();
  if (j.contains("behavior_priority")) {
    for (const auto& e : j["behavior_priority"]) {
      const auto b = trigger_from_string(e.get<std::string>());
      if (b) {
        out->behavior_priority.push_back(*b);
      }
    }
  }
  if (j.contains("scoring_bias")) {
    out->scoring_bias = bias_from_json(j["scoring_bias"]);
  }
  return true;
}

}  // namespace

json guidance_to_json(const Guidance& g) {
  json roles;
  for (const auto& [id, role] : g.roles) {
    roles[std::to_string(id)] = to_string(role);
  }
  return json{{"mode", to_string(g.mode)},
              {"primary_id", g.primary_id},
              {"support_ids", g.support_ids},
              {"roles", std::move(roles)},
              {"guidance", generation_guidance_to_json(g.guidance)},
              {"single_collider_intent", g.single_collider_intent}};
}

std::optional<Guidance> guidance_from_json(const json& j, std::string* error) {
  std::string scratch;
  std::string* err = error != nullptr ? error : &scratch;
  if (!j.is_object()) {
    *err = "guidance reply must be an object";
    return std::nullopt;
  }
  Guidance g;
  if (!j.contains("mode") || !j["mode"].is_string()) {
    *err = "mode missing";
    return std::nullopt;
  }
  const auto mode = mode_from_string(j["mode"].get<std::string>());
  if (!mode) {
    *err = "unknown mode";
    return std::nullopt;
  }
  g.mode = *mode;
  if (!j.contains("primary_id") || !j["primary_id"].is_number_integer()) {
    *err = "primary_id missing";
    return std::nullopt;
  }
  g.primary_id = j["primary_id"].get<int>();
  if (j.contains("support_ids")) {
    for (const auto& e : j["support_ids"]) {
      if (!e.is_number_integer()) {
        *err = "support_ids must be integers";
        return std::nullopt;
      }
      g.support_ids.push_back(e.get<int>());
    }
  }
  if (j.contains("roles")) {
    for (auto it = j["roles"].begin(); it != j["roles"].end(); ++it) {
      const auto role = role_from_string(it.value().get<std::string>());
      if (!role) {
        *err = "unknown role";
        return std::nullopt;
      }
      g.roles[std::stoi(it.key())] = *role;
    }
  }
  if (!j.contains("guidance") ||
      !generation_guidance_from_json(j["guidance"], &g.guidance, err)) {
    if (err->empty()) {
      *err = "guidance missing";
    }
    return std::nullopt;
  }
  if (j.contains("single_collider_intent")) {
    g.single_collider_intent = j["single_collider_intent"].get<bool>();
  }
  return g;
}

json kb_to_json(const KnowledgeBase& kb) {
  json entries = json::array();
  for (const KnowledgeEntry& e : kb.entries) {
    entries.push_back(
        json{{"mode", to_string(e.mode)},
             {"condition", json{{"topology", to_string(e.condition.topology)},
                                {"min_vehicles", e.condition.min_vehicles}}},
             {"conflict_zone", to_string(e.conflict_zone)},
             {"trigger", to_string(e.trigger)},
             {"guidance_template", generation_guidance_to_json(e.guidance_template)},
             {"fit", to_string(e.fit)}});
  }
  return json{{"version", kb.version}, {"entries", std::move(entries)}};
}

KnowledgeBase kb_from_json(const json& j) {
  KnowledgeBase kb;
  if (j.contains("version") && j["version"].is_string()) {
    kb.version = j["version"].get<std::string>();
  }
  const json& entries = j.contains("entries") ? j["entries"] : j;
  if (!entries.is_array()) {
    throw std::runtime_error("knowledge base: expected an entry list");
  }
  for (size_t i = 0; i < entries.size(); ++i) {
    const json& ej = entries[i];
    const std::string where = "entry " + std::to_string(i);
    KnowledgeEntry e;
    const auto mode = mode_from_string(ej.value("mode", ""));
    if (!mode) {
      throw std::runtime_error(where + ": unknown mode");
    }
    e.mode = *mode;
    if (ej.contains("condition")) {
      const json& c = ej["condition"];
      if (c.contains("topology")) {
        const auto t = topology_from_string(c["topology"].get<std::string>());
        if (!t) {
          throw std::runtime_error(where + ": unknown topology");
        }
        e.condition.topology = *t;
      }
      e.condition.min_vehicles = c.value("min_vehicles", 1);
    }
    const auto zone = zone_from_string(ej.value("conflict_zone", ""));
    if (!zone) {
      throw std::runtime_error(where + ": unknown conflict_zone");
    }
    e.conflict_zone = *zone;
    const auto trig = trigger_from_string(ej.value("trigger", ""));
    if (!trig) {
      throw std::runtime_error(where + ": unknown trigger");
    }
    e.trigger = *trig;
    if (!ej.contains("guidance_template")) {
      throw std::runtime_error(where + ": guidance_template missing");
    }
    std::string err;
    if (!generation_guidance_from_json(ej["guidance_template"], &e.guidance_template, &err)) {
      throw std::runtime_error(where + ": " + err);
    }
    const auto fit = fit_from_string(ej.value("fit", "medium"));
    if (!fit) {
      throw std::runtime_error(where + ": unknown fit level");
    }
    e.fit = *fit;
    kb.entries.push_back(std::move(e));
  }
  return kb;
}

KnowledgeBase load_knowledge_base(const std::string& path) {
  return kb_from_json(parse_json_file(path));
}

namespace {

KnowledgeEntry make_entry(CollisionMode mode, RoadTopology topo, RelativeZone zone,
                          TriggerBehavior trigger, double t_a, double t_b, FitLevel fit) {
  KnowledgeEntry e;
  e.mode = mode;
  e.condition.topology = topo;
  e.conflict_zone = zone;
  e.trigger = trigger;
  e.guidance_template.conflict_zone = zone;
  e.guidance_template.window_start = t_a;
  e.guidance_template.window_end = t_b;
  e.guidance_template.behavior_priority = {trigger};
  e.fit = fit;
  return e;
}

}  // namespace

KnowledgeBase builtin_knowledge_base() {
  KnowledgeBase kb;
  kb.version = "builtin-1";
  kb.entries = {
      make_entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::front,
                 TriggerBehavior::hard_brake, 0.5, 4.5, FitLevel::high),
      make_entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::rear,
                 TriggerBehavior::hard_brake, 1.0, 5.0, FitLevel::medium),
      make_entry(CollisionMode::crossing, RoadTopology::intersection, RelativeZone::crossing_zone,
                 TriggerBehavior::aggressive_cross, 1.0, 6.0, FitLevel::high),
      make_entry(CollisionMode::crossing, RoadTopology::intersection, RelativeZone::crossing_zone,
                 TriggerBehavior::yield_failure, 1.0, 6.5, FitLevel::medium),
      make_entry(CollisionMode::cut_in, RoadTopology::straight, RelativeZone::front_left,
                 TriggerBehavior::cut_in_close, 0.5, 4.0, FitLevel::high),
      make_entry(CollisionMode::cut_in, RoadTopology::straight, RelativeZone::front_right,
                 TriggerBehavior::cut_in_close, 0.5, 4.0, FitLevel::high),
      make_entry(CollisionMode::merge, RoadTopology::merge_road, RelativeZone::merge_zone,
                 TriggerBehavior::late_merge, 1.0, 6.0, FitLevel::high),
      make_entry(CollisionMode::head_on, RoadTopology::any, RelativeZone::front,
                 TriggerBehavior::yield_failure, 1.0, 6.0, FitLevel::low),
      make_entry(CollisionMode::turning, RoadTopology::intersection, RelativeZone::crossing_zone,
                 TriggerBehavior::turn_across, 1.0, 6.0, FitLevel::medium),
      make_entry(CollisionMode::vru, RoadTopology::any, RelativeZone::crossing_zone,
                 TriggerBehavior::aggressive_cross, 1.0, 6.5, FitLevel::medium),
  };
  return kb;
}

}  // namespace advgen
