#pragma once

#include <memory>
#include <string>
#include <vector>

#include "advgen/risk.hpp"

namespace advgen {

struct ExpertResult {
  Guidance guidance;
  bool fallback = false;          // remote path failed and the rule expert answered
  std::string fallback_reason;
};

// Contract: any implementation returns a Guidance whose ids come from the
// shortlist, with at most two supports and single-collider intent set.
class Expert {
 public:
  virtual ~Expert() = default;
  virtual std::string name() const = 0;
  // May throw; infer_guidance handles fallback.
  virtual Guidance infer(const Scene& scene, const std::vector<ShortlistCandidate>& shortlist,
                         const KnowledgeBase& kb) = 0;
};

// Deterministic expert: KB retrieval picks the mode, linear suitability
// scoring picks the primary, role-compatible candidates become supports, and
// the winning entry's template is specialized to the primary's estimated
// conflict time.
class RuleExpert : public Expert {
 public:
  explicit RuleExpert(RankingParams params = {}) : params_(params) {}
  std::string name() const override { return "rule"; }
  Guidance infer(const Scene& scene, const std::vector<ShortlistCandidate>& shortlist,
                 const KnowledgeBase& kb) override;

 private:
  RankingParams params_;
};

// Line-delimited JSON client: one request line with the scene digest and
// shortlist, one reply line matching the Guidance schema. 5 s timeout.
class RemoteExpert : public Expert {
 public:
  explicit RemoteExpert(std::string address, double timeout_seconds = 5.0)
      : address_(std::move(address)), timeout_(timeout_seconds) {}
  std::string name() const override { return "remote"; }
  Guidance infer(const Scene& scene, const std::vector<ShortlistCandidate>& shortlist,
                 const KnowledgeBase& kb) override;

 private:
  std::string address_;  // host:port
  double timeout_;
};

// Runs the expert and enforces the Guidance contract; on transport failure or
// a malformed/invalid reply, falls back to the rule expert and flags it.
ExpertResult infer_guidance(Expert& expert, const Scene& scene,
                            const std::vector<ShortlistCandidate>& shortlist,
                            const KnowledgeBase& kb, const RankingParams& params = {});

// Hex digest of the canonical scene JSON, used in remote requests.
std::string scene_digest(const Scene& scene);

}  // namespace advgen
