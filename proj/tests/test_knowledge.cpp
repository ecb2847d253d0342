#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "advgen/expert.hpp"
#include "advgen/json_canonical.hpp"
#include "advgen/knowledge.hpp"
#include "advgen/rng.hpp"
#include "advgen/synthetic.hpp"
#include "support/builders.hpp"

using namespace advgen;
using advgen::testing::make_track;
using advgen::testing::straight_road_scene;

namespace {

KnowledgeEntry entry(CollisionMode mode, RoadTopology topo, RelativeZone zone,
                     TriggerBehavior trigger, double t_a, double t_b) {
  KnowledgeEntry e;
  e.mode = mode;
  e.condition.topology = topo;
  e.conflict_zone = zone;
  e.trigger = trigger;
  e.guidance_template.conflict_zone = zone;
  e.guidance_template.window_start = t_a;
  e.guidance_template.window_end = t_b;
  e.guidance_template.behavior_priority = {trigger};
  return e;
}

// ego at 10 m/s, decelerating lead 15 m ahead at 6 m/s: every rear-end
// indicator fires (conflict estimated at 15/4 = 3.75 s, inside [0.5, 4.5])
Scene lead_braking_scene() {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {15.0, 0.0}, 0.0, 6.0, 90, s.dt, -1.0)};
  return s;
}

}  // namespace

TEST_CASE("kb_match fires all five indicators on a braking-lead scene") {
  const Scene s = lead_braking_scene();
  const KnowledgeEntry e =
      entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::front,
            TriggerBehavior::hard_brake, 0.5, 4.5);
  const double score = kb_match(s, e);
  // hand evaluation: 0.25 + 0.25 + 0.20 + 0.20 + 0.10
  CHECK(score == doctest::Approx(1.0));
  CHECK(score >= 0.5);
  CHECK(kb_match(s, e) == score);  // deterministic
}

TEST_CASE("kb_match stays at or below 0.35 without zone occupancy or arrival overlap") {
  Scene s = straight_road_scene(10.0);
  // distant trailing vehicle, falling further behind
  s.others = {make_track(1, {-60.0, 0.0}, 0.0, 4.0, 90, s.dt)};
  const KnowledgeEntry e =
      entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::front,
            TriggerBehavior::hard_brake, 0.5, 4.5);
  // hand evaluation: topology 0.25 + behavior prior 0.10, everything else 0
  const double score = kb_match(s, e);
  CHECK(score == doctest::Approx(0.35));
  CHECK(score <= 0.35);
}

TEST_CASE("kb_match rejects an empty scene") {
  Scene s = straight_road_scene(10.0);
  const KnowledgeEntry e = entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::front,
                                 TriggerBehavior::hard_brake, 0.5, 4.5);
  CHECK_THROWS_AS((void)kb_match(s, e), std::invalid_argument);
}

TEST_CASE("retrieve_mode ordering") {
  const Scene s = lead_braking_scene();

  SUBCASE("single entry gives a singleton list") {
    KnowledgeBase kb;
    kb.entries = {entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::front,
                        TriggerBehavior::hard_brake, 0.5, 4.5)};
    const auto ranked = retrieve_mode(s, kb);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].first == CollisionMode::rear_end);
  }

  SUBCASE("higher scoring mode wins") {
    KnowledgeBase kb;
    kb.entries = {entry(CollisionMode::rear_end, RoadTopology::any, RelativeZone::front,
                        TriggerBehavior::hard_brake, 0.5, 4.5),
                  entry(CollisionMode::crossing, RoadTopology::intersection,
                        RelativeZone::crossing_zone, TriggerBehavior::aggressive_cross, 1.0, 6.0)};
    const auto ranked = retrieve_mode(s, kb);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].first == CollisionMode::rear_end);
    CHECK(ranked[0].second > ranked[1].second);
  }

  SUBCASE("exact ties break by declaration order, independent of entry order") {
    // neither zone is occupied and neither trigger fires: both score
    // topology + prior = 0.35
    KnowledgeBase kb;
    kb.entries = {entry(CollisionMode::turning, RoadTopology::any, RelativeZone::rear,
                        TriggerBehavior::turn_across, 0.5, 4.0),
                  entry(CollisionMode::cut_in, RoadTopology::any, RelativeZone::rear,
                        TriggerBehavior::cut_in_close, 0.5, 4.0)};
    Scene far = straight_road_scene(10.0);
    far.others = {make_track(1, {45.0, 0.0}, 0.0, 10.0, 90, far.dt)};
    auto ranked = retrieve_mode(far, kb);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].second == doctest::Approx(ranked[1].second));
    CHECK(ranked[0].first == CollisionMode::cut_in);  // earlier in the enum
    std::swap(kb.entries[0], kb.entries[1]);
    const auto again = retrieve_mode(far, kb);
    CHECK(again[0].first == ranked[0].first);
    CHECK(again[1].first == ranked[1].first);
  }
}

TEST_CASE("validate_guidance enumerates violations") {
  Guidance g;
  g.mode = CollisionMode::rear_end;
  g.primary_id = 1;
  g.support_ids = {2};
  g.roles[2] = SupportRole::blocker;
  g.guidance.window_start = 1.0;
  g.guidance.window_end = 3.0;
  const std::vector<int> shortlist = {1, 2, 3, 4, 5};

  SUBCASE("well-formed guidance passes") {
    CHECK(validate_guidance(g, shortlist, 8.0).empty());
  }
  SUBCASE("three supports violate the cardinality bound") {
    g.support_ids = {2, 3, 4};
    g.roles[3] = SupportRole::rear_pressure;
    g.roles[4] = SupportRole::timing_shaper;
    const auto v = validate_guidance(g, shortlist, 8.0);
    REQUIRE_FALSE(v.empty());
    CHECK(v.front().find("|B*| <= 2") != std::string::npos);
  }
  SUBCASE("inverted time window is reported") {
    g.guidance.window_start = 5.0;
    g.guidance.window_end = 3.0;
    const auto v = validate_guidance(g, shortlist, 8.0);
    REQUIRE_FALSE(v.empty());
    CHECK(v.front().find("t_a < t_b") != std::string::npos);
  }
  SUBCASE("support equal to primary is rejected") {
    g.support_ids = {1};
    g.roles[1] = SupportRole::blocker;
    CHECK_FALSE(validate_guidance(g, shortlist, 8.0).empty());
  }
}

TEST_CASE("knowledge base JSON round trip") {
  const KnowledgeBase kb = builtin_knowledge_base();
  const KnowledgeBase reloaded = kb_from_json(kb_to_json(kb));
  REQUIRE(reloaded.entries.size() == kb.entries.size());
  CHECK(reloaded.version == kb.version);
  for (size_t i = 0; i < kb.entries.size(); ++i) {
    CHECK(reloaded.entries[i].mode == kb.entries[i].mode);
    CHECK(reloaded.entries[i].trigger == kb.entries[i].trigger);
    CHECK(reloaded.entries[i].guidance_template.window_start ==
          kb.entries[i].guidance_template.window_start);
  }
  // every mode used by the rule expert is covered
  for (int m = 0; m < kCollisionModeCount; ++m) {
    bool found = false;
    for (const KnowledgeEntry& e : kb.entries) {
      found = found || e.mode == static_cast<CollisionMode>(m);
    }
    CHECK(found);
  }
}

TEST_CASE("kb_from_json rejects malformed entries") {
  nlohmann::json bad = {{"entries", nlohmann::json::array({{{"mode", "warp_drive"}}})}};
  CHECK_THROWS(kb_from_json(bad));
}

TEST_CASE("kb_match stays in [0, 1] on randomized scenes and entries") {
  const KnowledgeBase kb = builtin_knowledge_base();
  for (uint64_t seed = 0; seed < 8; ++seed) {
    for (auto tmpl : {SceneTemplate::following, SceneTemplate::crossing, SceneTemplate::merge}) {
      const Scene s = make_scene(tmpl, hash_combine(seed, 1000 + static_cast<uint64_t>(tmpl)),
                                 "kbfuzz");
      for (const KnowledgeEntry& e : kb.entries) {
        const double score = kb_match(s, e);
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
      }
    }
  }
}

TEST_CASE("the bundled KB file matches the builtin knowledge base") {
  const std::string path = std::string(ADVGEN_SOURCE_DIR) + "/data/kb_default.json";
  const KnowledgeBase bundled = load_knowledge_base(path);
  const KnowledgeBase builtin = builtin_knowledge_base();
  REQUIRE(bundled.entries.size() == builtin.entries.size());
  CHECK(canonical_dump(kb_to_json(bundled)) == canonical_dump(kb_to_json(builtin)));
}

TEST_CASE("rule expert picks the lead as primary and the neighbor as blocker") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {15.0, 0.0}, 0.0, 6.0, 90, s.dt, -1.0),
              make_track(2, {2.0, 3.5}, 0.0, 10.0, 90, s.dt)};
  const auto sl = shortlist(s, 6);
  REQUIRE(sl.size() == 2);
  RuleExpert expert;
  const Guidance g = expert.infer(s, sl, builtin_knowledge_base());
  CHECK(g.mode == CollisionMode::rear_end);
  CHECK(g.primary_id == 1);
  REQUIRE(g.support_ids.size() == 1);
  CHECK(g.support_ids[0] == 2);
  CHECK(g.roles.at(2) == SupportRole::blocker);
  CHECK(g.single_collider_intent);
  CHECK(validate_guidance(g, {1, 2}, s.horizon_seconds()).empty());
}

TEST_CASE("a shortlist of one forces that vehicle as primary with no supports") {
  const Scene s = lead_braking_scene();
  const auto sl = shortlist(s, 6);
  REQUIRE(sl.size() == 1);
  RuleExpert expert;
  const ExpertResult r = infer_guidance(expert, s, sl, builtin_knowledge_base());
  CHECK_FALSE(r.fallback);
  CHECK(r.guidance.primary_id == 1);
  CHECK(r.guidance.support_ids.empty());
}

namespace {

// One-shot line server: accepts a single connection and answers with a fixed
// line, as the remote expert protocol expects.
struct LineServer {
  int listen_fd = -1;
  int port = 0;
  std::thread worker;

  explicit LineServer(std::string reply) {
    listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(listen_fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port = ntohs(addr.sin_port);
    REQUIRE(::listen(listen_fd, 1) == 0);
    worker = std::thread([fd = listen_fd, reply = std::move(reply)]() {
      const int conn = ::accept(fd, nullptr, nullptr);
      if (conn < 0) {
        return;
      }
      char c = 0;
      while (::recv(conn, &c, 1, 0) == 1 && c != '\n') {
      }
      const std::string line = reply + "\n";
      (void)!::send(conn, line.data(), line.size(), 0);
      ::close(conn);
    });
  }

  ~LineServer() {
    if (listen_fd >= 0) {
      ::close(listen_fd);
    }
    if (worker.joinable()) {
      worker.join();
    }
  }
};

}  // namespace

TEST_CASE("remote expert consumes a valid reply") {
  const Scene s = lead_braking_scene();
  const auto sl = shortlist(s, 6);
  const nlohmann::json reply = {
      {"mode", "rear_end"},
      {"primary_id", 1},
      {"support_ids", nlohmann::json::array()},
      {"roles", nlohmann::json::object()},
      {"guidance",
       {{"conflict_zone", "front"},
        {"time_window", nlohmann::json::array({1.0, 3.5})},
        {"behavior_priority", nlohmann::json::array({"hard_brake"})}}},
      {"single_collider_intent", true}};
  LineServer server(reply.dump());
  RemoteExpert expert("127.0.0.1:" + std::to_string(server.port), 2.0);
  const ExpertResult r = infer_guidance(expert, s, sl, builtin_knowledge_base());
  CHECK_FALSE(r.fallback);
  CHECK(r.guidance.primary_id == 1);
  CHECK(r.guidance.guidance.window_end == doctest::Approx(3.5));
}

TEST_CASE("remote reply with support == primary is rejected and falls back") {
  Scene s = straight_road_scene(10.0);
  s.others = {make_track(1, {15.0, 0.0}, 0.0, 6.0, 90, s.dt, -1.0),
              make_track(2, {2.0, 3.5}, 0.0, 10.0, 90, s.dt)};
  const auto sl = shortlist(s, 6);
  const nlohmann::json reply = {
      {"mode", "rear_end"},
      {"primary_id", 1},
      {"support_ids", nlohmann::json::array({1})},
      {"roles", {{"1", "blocker"}}},
      {"guidance",
       {{"conflict_zone", "front"}, {"time_window", nlohmann::json::array({1.0, 3.5})}}},
      {"single_collider_intent", true}};
  LineServer server(reply.dump());
  RemoteExpert expert("127.0.0.1:" + std::to_string(server.port), 2.0);
  const ExpertResult r = infer_guidance(expert, s, sl, builtin_knowledge_base());
  CHECK(r.fallback);
  CHECK_FALSE(r.fallback_reason.empty());
  // the fallback guidance still satisfies the contract
  CHECK(validate_guidance(r.guidance, {1, 2}, s.horizon_seconds()).empty());
}

TEST_CASE("remote transport failure falls back to the rule expert") {
  const Scene s = lead_braking_scene();
  const auto sl = shortlist(s, 6);
  RemoteExpert expert("127.0.0.1:1", 0.5);  // nothing listens there
  const ExpertResult r = infer_guidance(expert, s, sl, builtin_knowledge_base());
  CHECK(r.fallback);
  CHECK(r.guidance.primary_id == 1);
}
