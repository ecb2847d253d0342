#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "advgen/metrics.hpp"
#include "advgen/rng.hpp"

using namespace advgen;

namespace {

ScenarioOutcome outcome(const std::string& id, bool collided, bool primary_only = true,
                        bool support_vio = false, bool multi_vio = false) {
  ScenarioOutcome o;
  o.scene_id = id;
  o.collided = collided;
  o.primary_only = primary_only;
  o.support_violation = support_vio;
  o.multi_violation = multi_vio;
  return o;
}

std::vector<ScenarioOutcome> outcomes_with(int collided, int total) {
  std::vector<ScenarioOutcome> out;
  for (int i = 0; i < total; ++i) {
    out.push_back(outcome("s" + std::to_string(i), i < collided));
  }
  return out;
}

}  // namespace

TEST_CASE("asr is the mean collided flag") {
  CHECK(asr(outcomes_with(0, 10)) == doctest::Approx(0.0));
  CHECK(asr(outcomes_with(10, 10)) == doctest::Approx(1.0));
  CHECK(asr(outcomes_with(462, 500)) == doctest::Approx(0.924));
  CHECK_THROWS_AS((void)asr({}), std::invalid_argument);
}

TEST_CASE("qasr reproduces the product identity") {
  SUBCASE("clean half-successful set") {
    const QasrBreakdown q = qasr(outcomes_with(5, 10));
    CHECK(q.asr == doctest::Approx(0.5));
    CHECK(q.primary_only == doctest::Approx(1.0));
    CHECK(q.qasr == doctest::Approx(0.5));
  }
  SUBCASE("mixed attribution") {
    // 8/10 collided; 6 of the 8 primary-only; 1 support violation; no multi
    std::vector<ScenarioOutcome> set;
    for (int i = 0; i < 8; ++i) {
      set.push_back(outcome("c" + std::to_string(i), true, i < 6));
    }
    set.push_back(outcome("n0", false, true, true));
    set.push_back(outcome("n1", false));
    const QasrBreakdown q = qasr(set);
    CHECK(q.asr == doctest::Approx(0.8));
    CHECK(q.primary_only == doctest::Approx(0.75));
    CHECK(q.support_vio == doctest::Approx(0.1));
    CHECK(q.multi_vio == doctest::Approx(0.0));
    CHECK(q.qasr == doctest::Approx(0.8 * 0.75 * 0.9));
  }
  SUBCASE("all scenes multi-colliding zero out qasr") {
    std::vector<ScenarioOutcome> set;
    for (int i = 0; i < 4; ++i) {
      set.push_back(outcome("m" + std::to_string(i), true, false, false, true));
    }
    CHECK(qasr(set).qasr == doctest::Approx(0.0));
  }
  SUBCASE("qasr never exceeds asr (random fuzz)") {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<ScenarioOutcome> set;
      const int n = 1 + static_cast<int>(rng.below(30));
      for (int i = 0; i < n; ++i) {
        set.push_back(outcome("f" + std::to_string(i), rng.uniform() < 0.7, rng.uniform() < 0.8,
                              rng.uniform() < 0.2, rng.uniform() < 0.1));
      }
      const QasrBreakdown q = qasr(set);
      CHECK(q.qasr <= q.asr + 1e-12);
      CHECK(q.valid_primary_attack <= q.asr + 1e-12);
    }
  }
  SUBCASE("the product identity is reproduced on 1000 random outcome sets") {
    SplitMix64 rng(5150);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 5 + static_cast<int>(rng.below(40));
      std::vector<ScenarioOutcome> set;
      int collided = 0, primary = 0, sv = 0, mv = 0;
      for (int i = 0; i < n; ++i) {
        ScenarioOutcome o = outcome("t" + std::to_string(i), rng.uniform() < 0.6,
                                    rng.uniform() < 0.8, rng.uniform() < 0.3,
                                    rng.uniform() < 0.2);
        collided += o.collided;
        primary += o.collided && o.primary_only;
        sv += o.support_violation;
        mv += o.multi_violation;
        set.push_back(std::move(o));
      }
      // independent route: the aggregate rates multiplied out directly
      const double nd = n;
      const double primary_rate = collided > 0 ? static_cast<double>(primary) / collided : 1.0;
      const double expected =
          (collided / nd) * primary_rate * (1.0 - sv / nd) * (1.0 - mv / nd);
      CHECK(std::fabs(qasr(set).qasr - expected) <= 1e-12);
    }
  }
}

TEST_CASE("recovery_gain") {
  SUBCASE("paper-scale arithmetic") {
    const auto base = outcomes_with(237, 500);  // 47.4%
    const auto evo = outcomes_with(277, 500);   // 55.4%
    const RecoveryGain g = recovery_gain(base, evo, 2000, 3);
    CHECK(g.base_asr == doctest::Approx(0.474));
    CHECK(g.evo_asr == doctest::Approx(0.554));
    CHECK(g.gain == doctest::Approx(0.080));
  }
  SUBCASE("identical sets give zero gain and a CI containing zero") {
    const auto base = outcomes_with(4, 10);
    const RecoveryGain g = recovery_gain(base, base, 5000, 3);
    CHECK(g.gain == 0.0);
    CHECK(g.ci_low <= 0.0);
    CHECK(g.ci_high >= 0.0);
  }
  SUBCASE("one-sided wins push the CI lower bound to or above zero") {
    // evo wins every scene the base loses, never the reverse: on a 5-scene
    // set every possible resample diff is >= 0, so any percentile is >= 0
    std::vector<ScenarioOutcome> base, evo;
    for (int i = 0; i < 5; ++i) {
      base.push_back(outcome("s" + std::to_string(i), i == 0));
      evo.push_back(outcome("s" + std::to_string(i), true));
    }
    // exhaustive check over all 5^5 resamples: the diff vector is {0,1,...}
    // with no negative entry, so the minimum achievable mean is 0
    const RecoveryGain g = recovery_gain(base, evo, 10000, 3);
    CHECK(g.ci_low >= 0.0);
    CHECK(g.gain == doctest::Approx(0.8));
  }
  SUBCASE("bootstrap is deterministic under a fixed seed") {
    const auto base = outcomes_with(3, 20);
    const auto evo = outcomes_with(9, 20);
    const RecoveryGain a = recovery_gain(base, evo, 10000, 42);
    const RecoveryGain b = recovery_gain(base, evo, 10000, 42);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
  }
  SUBCASE("unpaired sets are rejected") {
    auto base = outcomes_with(3, 10);
    auto evo = outcomes_with(3, 9);
    CHECK_THROWS_AS((void)recovery_gain(base, evo, 100, 1), std::invalid_argument);
    evo = outcomes_with(3, 10);
    evo[0].scene_id = "different";
    CHECK_THROWS_AS((void)recovery_gain(base, evo, 100, 1), std::invalid_argument);
  }
  SUBCASE("the percentile CI contains the point estimate on random cases") {
    SplitMix64 rng(777);
    int contained = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      const int n = 10 + static_cast<int>(rng.below(40));
      std::vector<ScenarioOutcome> base, evo;
      for (int i = 0; i < n; ++i) {
        const std::string id = "s" + std::to_string(i);
        base.push_back(outcome(id, rng.uniform() < 0.4));
        evo.push_back(outcome(id, rng.uniform() < 0.6));
      }
      const RecoveryGain g = recovery_gain(base, evo, 3000, rng.next());
      if (g.ci_low <= g.gain && g.gain <= g.ci_high) {
        ++contained;
      }
    }
    CHECK(contained >= trials * 0.99);
  }
}

TEST_CASE("wasserstein_1d") {
  SUBCASE("identical samples give zero") {
    CHECK(wasserstein_1d({1, 2, 3}, {3, 2, 1}) == doctest::Approx(0.0));
  }
  SUBCASE("pure shift") {
    CHECK(wasserstein_1d({0, 1}, {1, 2}) == doctest::Approx(1.0));
  }
  SUBCASE("sorted pairing on equal sizes") {
    CHECK(wasserstein_1d({0, 0}, {0, 2}) == doctest::Approx(1.0));
  }
  SUBCASE("unequal sizes use the exact quantile coupling") {
    // {0} vs {0, 2}: half the mass moves by 2
    CHECK(wasserstein_1d({0}, {0, 2}) == doctest::Approx(1.0));
    CHECK(wasserstein_1d({1, 1, 1}, {1}) == doctest::Approx(0.0));
  }
  SUBCASE("empty inputs throw") {
    CHECK_THROWS_AS((void)wasserstein_1d({}, {1.0}), std::invalid_argument);
  }
  SUBCASE("metric properties on random triples") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
      auto sample = [&](int n) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i) {
          v.push_back(rng.uniform(-5.0, 5.0));
        }
        return v;
      };
      const auto a = sample(3 + static_cast<int>(rng.below(12)));
      const auto b = sample(3 + static_cast<int>(rng.below(12)));
      const auto c = sample(3 + static_cast<int>(rng.below(12)));
      const double ab = wasserstein_1d(a, b);
      const double ba = wasserstein_1d(b, a);
      const double ac = wasserstein_1d(a, c);
      const double cb = wasserstein_1d(c, b);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
      CHECK(ab >= 0.0);
      CHECK(ab <= ac + cb + 1e-9);  // triangle inequality
      CHECK(wasserstein_1d(a, a) == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("penalty aggregation") {
  SUBCASE("all-clean outcomes give zeros") {
    const PenaltySummary p = penalties(outcomes_with(0, 5));
    CHECK(p.crash_obj == 0.0);
    CHECK(p.kine_pen == 0.0);
    CHECK(p.signal_viol == 0.0);
  }
  SUBCASE("rates follow the flagged fraction") {
    auto set = outcomes_with(0, 4);
    set[1].signal_violation = true;
    set[2].kine_penalty = 0.7;
    set[3].crash_obj_count = 2;
    const PenaltySummary p = penalties(set);
    CHECK(p.signal_viol == doctest::Approx(0.25));
    CHECK(p.kine_pen == doctest::Approx(0.7 / 4.0));
    CHECK(p.crash_obj == doctest::Approx(0.5));
  }
}

TEST_CASE("report emission is deterministic with the documented column order") {
  auto set = outcomes_with(3, 5);
  set[0].d_min = 0.0;
  SignalSamples gen, ref;
  gen.accel = {0.1, -0.2};
  gen.vel = {9.0, 10.0};
  gen.yaw_rate = {0.0, 0.01};
  ref = gen;
  const MetricsSummary summary = summarize(set, gen, ref);
  const std::string csv = report_csv(summary);
  CHECK(csv.find("scene_count,asr,primary_match,valid_primary_attack,qasr,"
                 "multi_collision_rate,support_violation_rate,crash_obj,cross_line,kine_pen,"
                 "accel_viol,lat_accel_viol,road_dep,signal_viol,wd_accel,wd_vel,wd_yaw") == 0);
  CHECK(csv == report_csv(summary));
  CHECK(summary.wd_accel == doctest::Approx(0.0));

  const nlohmann::json j = report_json(summary, {{"seed", 1}}, 1);
  CHECK(j.contains("metrics"));
  CHECK(j["metrics"]["asr"].get<double>() == doctest::Approx(0.6));
  // JSON round-trips through parse without loss of the metric fields
  const nlohmann::json parsed = nlohmann::json::parse(j.dump());
  CHECK(parsed["metrics"] == j["metrics"]);
}
