#include "advgen/expert.hpp"

#include <algorithm>
#include <cstdio>

#include "advgen/scene_io.hpp"
#include "advgen/rng.hpp"

namespace advgen {

namespace {

// Per-vehicle zone/trigger match for the chosen entry.
double ce_match_for_entry(const Scene& scene, int vehicle_id, const KnowledgeEntry& entry) {
  const double zone = occupies_zone(scene, vehicle_id, entry.conflict_zone) ? 1.0 : 0.0;
  const double trend = trigger_trend_match(scene, vehicle_id, entry.trigger) ? 1.0 : 0.0;
  return 0.5 * zone + 0.5 * trend;
}

}  // namespace

Guidance RuleExpert::infer(const Scene& scene, const std::vector<ShortlistCandidate>& shortlist,
                           const KnowledgeBase& kb) {
  if (shortlist.empty()) {
    throw std::invalid_argument("RuleExpert: empty shortlist");
  }
  if (kb.entries.empty()) {
    throw std::invalid_argument("RuleExpert: empty knowledge base");
  }
  const auto ranked = retrieve_mode(scene, kb);
  const CollisionMode mode = ranked.front().first;
  const KnowledgeEntry* entry = best_entry_for_mode(scene, kb, mode);

  std::vector<std::pair<int, PrimaryFeatures>> feats;
  for (const ShortlistCandidate& c : shortlist) {
    PrimaryFeatures f;
    f.dist_risk = c.dist_risk;
    f.risk_total = c.risk.total;
    f.ce_match = ce_match_for_entry(scene, c.vehicle_id, *entry);
    feats.push_back({c.vehicle_id, f});
  }
  const int primary = select_primary(feats, params_);

  Guidance g;
  g.mode = mode;
  g.primary_id = primary;
  g.guidance = entry->guidance_template;
  g.single_collider_intent = true;

  // Specialize the template window to the primary's estimated arrival at the
  // conflict point.
  const ConflictEstimate conflict = estimate_conflict(scene, primary);
  const double horizon = scene.horizon_seconds();
  const double width = std::max(1.0, entry->guidance_template.window_end -
                                         entry->guidance_template.window_start);
  if (conflict.exists) {
    double center = std::clamp(conflict.t_vehicle, width * 0.5, horizon - width * 0.5);
    if (horizon <= width) {
      center = horizon * 0.5;
    }
    g.guidance.window_start = std::max(0.0, center - width * 0.5);
    g.guidance.window_end = std::min(horizon, center + width * 0.5);
  } else {
    g.guidance.window_start = std::min(entry->guidance_template.window_start, horizon * 0.5);
    g.guidance.window_end = std::min(entry->guidance_template.window_end, horizon);
  }
  if (g.guidance.window_end - g.guidance.window_start < 0.4) {
    g.guidance.window_end = std::min(horizon, g.guidance.window_start + 0.4);
  }

  std::vector<int> remaining;
  for (const ShortlistCandidate& c : shortlist) {
    if (c.vehicle_id != primary) {
      remaining.push_back(c.vehicle_id);
    }
  }
  for (const auto& [id, role] : select_supports(remaining, primary, scene, g.guidance, params_)) {
    g.support_ids.push_back(id);
    g.roles[id] = role;
  }
  return g;
}

std::string scene_digest(const Scene& scene) {
  const uint64_t h = hash_string(save_scene_canonical(scene));
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExpertResult infer_guidance(Expert& expert, const Scene& scene,
                            const std::vector<ShortlistCandidate>& shortlist,
                            const KnowledgeBase& kb, const RankingParams& params) {
  if (shortlist.empty()) {
    throw std::invalid_argument("infer_guidance: empty shortlist");
  }
  std::vector<int> ids;
  for (const ShortlistCandidate& c : shortlist) {
    ids.push_back(c.vehicle_id);
  }
  ExpertResult out;
  std::string reason;
  try {
    out.guidance = expert.infer(scene, shortlist, kb);
    const auto violations = validate_guidance(out.guidance, ids, scene.horizon_seconds());
    if (violations.empty()) {
      return out;
    }
    reason = "invalid guidance: " + violations.front();
  } catch (const std::exception& e) {
    reason = e.what();
  }
  RuleExpert fallback(params);
  out.guidance = fallback.infer(scene, shortlist, kb);
  out.fallback = true;
  out.fallback_reason = reason;
  return out;
}

}  // namespace advgen
