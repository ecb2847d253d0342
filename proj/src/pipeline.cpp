#include "advgen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "advgen/json_canonical.hpp"
#include "advgen/rng.hpp"
#include "advgen/scene_io.hpp"
#include "advgen/version.hpp"

namespace advgen {

namespace {

using nlohmann::json;

json controller_to_json(const ControllerSpec& c) {
  return json{{"kind", to_string(c.kind)},
              {"idm", json{{"v0", c.idm.v0},
                           {"headway", c.idm.headway},
                           {"a_max", c.idm.a_max},
                           {"b", c.idm.b},
                           {"s0", c.idm.s0}}},
              {"cruise", json{{"set_speed", c.cruise.set_speed},
                              {"brake_decel", c.cruise.brake_decel},
                              {"ttc_brake", c.cruise.ttc_brake}}},
              {"expert", json{{"lookahead_gain", c.expert.lookahead_gain},
                              {"evade_gap", c.expert.evade_gap},
                              {"evade_offset", c.expert.evade_offset},
                              {"brake_decel", c.expert.brake_decel}}}};
}

ControllerSpec controller_from_json(const json& j) {
  ControllerSpec c;
  if (j.contains("kind")) {
    const auto k = controller_from_string(j["kind"].get<std::string>());
    if (!k) {
      throw std::runtime_error("config: unknown controller kind '" +
                               j["kind"].get<std::string>() + "'");
    }
    c.kind = *k;
  }
  if (j.contains("idm")) {
    const json& i = j["idm"];
    c.idm.v0 = i.value("v0", c.idm.v0);
    c.idm.headway = i.value("headway", c.idm.headway);
    c.idm.a_max = i.value("a_max", c.idm.a_max);
    c.idm.b = i.value("b", c.idm.b);
    c.idm.s0 = i.value("s0", c.idm.s0);
  }
  if (j.contains("cruise")) {
    const json& i = j["cruise"];
    c.cruise.set_speed = i.value("set_speed", c.cruise.set_speed);
    c.cruise.brake_decel = i.value("brake_decel", c.cruise.brake_decel);
    c.cruise.ttc_brake = i.value("ttc_brake", c.cruise.ttc_brake);
  }
  if (j.contains("expert")) {
    const json& i = j["expert"];
    c.expert.lookahead_gain = i.value("lookahead_gain", c.expert.lookahead_gain);
    c.expert.evade_gap = i.value("evade_gap", c.expert.evade_gap);
    c.expert.evade_offset = i.value("evade_offset", c.expert.evade_offset);
    c.expert.brake_decel = i.value("brake_decel", c.expert.brake_decel);
  }
  return c;
}

template <size_t N>
json array_to_json(const std::array<double, N>& a) {
  json out = json::array();
  for (double v : a) {
    out.push_back(v);
  }
  return out;
}

template <size_t N>
void array_from_json(const json& j, std::array<double, N>& out) {
  if (!j.is_array() || j.size() != N) {
    throw std::runtime_error("config: expected an array of " + std::to_string(N) + " numbers");
  }
  for (size_t i = 0; i < N; ++i) {
    out[i] = j[i].get<double>();
  }
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& c, bool echo) {
  json j;
  if (!echo) {
    j["scenario_dir"] = c.scenario_dir;
    j["kb_file"] = c.kb_file;
    j["output_dir"] = c.output_dir;
    j["parallelism"] = c.parallelism;
    j["write_timings"] = c.write_timings;
  }
  j["expert"] = json{{"kind", c.expert.remote ? "remote" : "rule"},
                     {"address", c.expert.address}};
  j["controller"] = controller_to_json(c.controller);
  j["gates"] = json{{"rule", c.engine.gates.rule}, {"physical", c.engine.gates.physical}};
  j["ranking"] = json{{"primary_weights", array_to_json(c.engine.ranking.primary_weights)},
                      {"support_weights", array_to_json(c.engine.ranking.support_weights)},
                      {"k_shortlist", c.engine.ranking.k_shortlist},
                      {"m_supports_max", c.engine.ranking.m_supports_max},
                      {"overlap_penalty", c.engine.ranking.overlap_penalty},
                      {"corridor_margin", c.engine.ranking.corridor_margin}};
  const TrajRankWeights& w = c.engine.traj_weights;
  j["trajectory_weights"] = json{{"primary_proxy", w.primary_proxy},
                                 {"primary_mode", w.primary_mode},
                                 {"primary_window", w.primary_window},
                                 {"primary_zone", w.primary_zone},
                                 {"support_pressure", w.support_pressure},
                                 {"support_role", w.support_role},
                                 {"support_timing", w.support_timing},
                                 {"support_natural", w.support_natural},
                                 {"support_distinct", w.support_distinct},
                                 {"proxy_scale", w.proxy_scale},
                                 {"pressure_offset", w.pressure_offset},
                                 {"pressure_scale", w.pressure_scale},
                                 {"jerk_cap", w.jerk_cap}};
  j["limits"] = json{{"v_max", c.engine.limits.v_max},
                     {"a_long_max", c.engine.limits.a_long_max},
                     {"a_lat_max", c.engine.limits.a_lat_max},
                     {"jerk_max", c.engine.limits.jerk_max}};
  j["loop"] = json{{"r_max", c.engine.loop.r_max},
                   {"n_rollout_buffer", c.engine.loop.n_rollout_buffer},
                   {"alpha_discount", c.engine.loop.alpha_discount},
                   {"jcl_weights", array_to_json(c.engine.loop.jcl_weights)},
                   {"near_miss_dist", c.engine.loop.near_miss_dist},
                   {"brake_escape_decel", c.engine.loop.brake_escape_decel},
                   {"steer_escape_dev", c.engine.loop.steer_escape_dev}};
  j["candidates_m"] = c.engine.candidates_m;
  j["full_footprint_road"] = c.engine.full_footprint_road;
  j["seed"] = c.seed;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.scenario_dir = j.value("scenario_dir", c.scenario_dir);
  c.kb_file = j.value("kb_file", c.kb_file);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.parallelism = std::max(1, j.value("parallelism", c.parallelism));
  c.write_timings = j.value("write_timings", c.write_timings);
  if (j.contains("expert")) {
    const std::string kind = j["expert"].value("kind", "rule");
    if (kind != "rule" && kind != "remote") {
      throw std::runtime_error("config: expert.kind must be rule or remote");
    }
    c.expert.remote = kind == "remote";
    c.expert.address = j["expert"].value("address", "");
  }
  if (j.contains("controller")) {
    c.controller = controller_from_json(j["controller"]);
  }
  if (j.contains("gates")) {
    c.engine.gates.rule = j["gates"].value("rule", true);
    c.engine.gates.physical = j["gates"].value("physical", true);
  }
  if (j.contains("ranking")) {
    const json& r = j["ranking"];
    if (r.contains("primary_weights")) {
      array_from_json(r["primary_weights"], c.engine.ranking.primary_weights);
    }
    if (r.contains("support_weights")) {
      array_from_json(r["support_weights"], c.engine.ranking.support_weights);
    }
    for (double w : c.engine.ranking.primary_weights) {
      if (w < 0.0) {
        throw std::runtime_error("config: ranking weights must be nonnegative");
      }
    }
    for (double w : c.engine.ranking.support_weights) {
      if (w < 0.0) {
        throw std::runtime_error("config: ranking weights must be nonnegative");
      }
    }
    c.engine.ranking.k_shortlist = std::max(1, r.value("k_shortlist", c.engine.ranking.k_shortlist));
    // the single-collider structure caps supports at two
    c.engine.ranking.m_supports_max =
        std::clamp(r.value("m_supports_max", c.engine.ranking.m_supports_max), 0, 2);
    c.engine.ranking.overlap_penalty = r.value("overlap_penalty", c.engine.ranking.overlap_penalty);
    c.engine.ranking.corridor_margin = r.value("corridor_margin", c.engine.ranking.corridor_margin);
  }
  if (j.contains("trajectory_weights")) {
    const json& w = j["trajectory_weights"];
    TrajRankWeights& t = c.engine.traj_weights;
    t.primary_proxy = w.value("primary_proxy", t.primary_proxy);
    t.primary_mode = w.value("primary_mode", t.primary_mode);
    t.primary_window = w.value("primary_window", t.primary_window);
    t.primary_zone = w.value("primary_zone", t.primary_zone);
    t.support_pressure = w.value("support_pressure", t.support_pressure);
    t.support_role = w.value("support_role", t.support_role);
    t.support_timing = w.value("support_timing", t.support_timing);
    t.support_natural = w.value("support_natural", t.support_natural);
    t.support_distinct = w.value("support_distinct", t.support_distinct);
    t.proxy_scale = w.value("proxy_scale", t.proxy_scale);
    t.pressure_offset = w.value("pressure_offset", t.pressure_offset);
    t.pressure_scale = w.value("pressure_scale", t.pressure_scale);
    t.jerk_cap = w.value("jerk_cap", t.jerk_cap);
  }
  if (j.contains("limits")) {
    const json& l = j["limits"];
    c.engine.limits.v_max = l.value("v_max", c.engine.limits.v_max);
    c.engine.limits.a_long_max = l.value("a_long_max", c.engine.limits.a_long_max);
    c.engine.limits.a_lat_max = l.value("a_lat_max", c.engine.limits.a_lat_max);
    c.engine.limits.jerk_max = l.value("jerk_max", c.engine.limits.jerk_max);
  }
  if (j.contains("loop")) {
    const json& l = j["loop"];
    c.engine.loop.r_max = l.value("r_max", c.engine.loop.r_max);
    if (c.engine.loop.r_max < 0) {
      throw std::runtime_error("config: loop.r_max must be >= 0");
    }
    c.engine.loop.n_rollout_buffer = l.value("n_rollout_buffer", c.engine.loop.n_rollout_buffer);
    c.engine.loop.alpha_discount = l.value("alpha_discount", c.engine.loop.alpha_discount);
    if (c.engine.loop.alpha_discount <= 0.0 || c.engine.loop.alpha_discount > 1.0) {
      throw std::runtime_error("config: loop.alpha_discount must be in (0, 1]");
    }
    if (l.contains("jcl_weights")) {
      array_from_json(l["jcl_weights"], c.engine.loop.jcl_weights);
    }
    c.engine.loop.near_miss_dist = l.value("near_miss_dist", c.engine.loop.near_miss_dist);
    c.engine.loop.brake_escape_decel =
        l.value("brake_escape_decel", c.engine.loop.brake_escape_decel);
    c.engine.loop.steer_escape_dev = l.value("steer_escape_dev", c.engine.loop.steer_escape_dev);
  }
  c.engine.candidates_m = j.value("candidates_m", c.engine.candidates_m);
  c.engine.full_footprint_road = j.value("full_footprint_road", c.engine.full_footprint_road);
  c.seed = j.value("seed", c.seed);
  return c;
}

RunConfig load_config(const std::string& path) {
  return config_from_json(parse_json_file(path));
}

uint64_t scene_seed(uint64_t run_seed, const std::string& scene_id) {
  return hash_combine(run_seed, hash_string(scene_id));
}

std::unique_ptr<Expert> make_expert(const RunConfig& config) {
  if (config.expert.remote) {
    std::string address = config.expert.address;
    if (const char* env = std::getenv("ADVGEN_EXPERT_ADDR"); env != nullptr && *env != '\0') {
      address = env;
    }
    return std::make_unique<RemoteExpert>(address);
  }
  return std::make_unique<RuleExpert>(config.engine.ranking);
}

namespace {

SignalSamples trajectory_signals(const std::vector<VehicleState>& states, double dt) {
  SignalSamples out;
  const size_t n = states.size();
  for (size_t k = 0; k < n; ++k) {
    out.vel.push_back(states[k].v);
    if (k + 1 < n) {
      out.accel.push_back((states[k + 1].v - states[k].v) / dt);
      out.yaw_rate.push_back(wrap_angle(states[k + 1].theta - states[k].theta) / dt);
    }
  }
  return out;
}

SignalSamples track_signals(const Track& track, double dt) {
  SignalSamples out;
  for (size_t k = 0; k < track.states.size(); ++k) {
    if (!track.valid_at(k)) {
      continue;
    }
    out.vel.push_back(track.states[k].v);
    if (k + 1 < track.states.size() && track.valid_at(k + 1)) {
      out.accel.push_back((track.states[k + 1].v - track.states[k].v) / dt);
      out.yaw_rate.push_back(wrap_angle(track.states[k + 1].theta - track.states[k].theta) / dt);
    }
  }
  return out;
}

json states_to_json(const std::vector<VehicleState>& states) {
  json out = json::array();
  for (const VehicleState& s : states) {
    out.push_back(json::array({s.x, s.y, s.v, s.a, s.theta}));
  }
  return out;
}

std::vector<VehicleState> states_from_json(const json& j) {
  std::vector<VehicleState> out;
  for (const auto& f : j) {
    VehicleState s;
    s.x = f[0].get<double>();
    s.y = f[1].get<double>();
    s.v = f[2].get<double>();
    s.a = f[3].get<double>();
    s.theta = f[4].get<double>();
    out.push_back(s);
  }
  return out;
}

json gate_report_to_json(const GateReport& r) {
  json violations = json::array();
  for (const Violation& v : r.violations) {
    violations.push_back(
        json{{"kind", to_string(v.kind)}, {"frame", v.frame}, {"magnitude", v.magnitude}});
  }
  return json{{"road_ok", r.road_ok},
              {"signal_ok", r.signal_ok},
              {"dyn_ok", r.dyn_ok},
              {"int_ok", r.int_ok},
              {"overall", r.overall()},
              {"violations", std::move(violations)}};
}

json scenario_gates_to_json(const ScenarioGateReport& g) {
  json per = json::array();
  for (const auto& [id, r] : g.per_vehicle) {
    json entry = gate_report_to_json(r);
    entry["vehicle_id"] = id;
    per.push_back(std::move(entry));
  }
  return json{{"overall", g.overall}, {"per_vehicle", std::move(per)}};
}

json outcome_to_json(const ScenarioOutcome& o) {
  return json{{"scene_id", o.scene_id},
              {"collided", o.collided},
              {"primary_only", o.primary_only},
              {"support_violation", o.support_violation},
              {"multi_violation", o.multi_violation},
              {"road_violation", o.road_violation},
              {"signal_violation", o.signal_violation},
              {"accel_violation", o.accel_violation},
              {"lat_accel_violation", o.lat_accel_violation},
              {"crash_obj_count", o.crash_obj_count},
              {"cross_line_count", o.cross_line_count},
              {"d_min", o.d_min},
              {"kine_penalty", o.kine_penalty}};
}

ScenarioOutcome outcome_from_json(const json& j) {
  ScenarioOutcome o;
  o.scene_id = j.value("scene_id", "");
  o.collided = j.value("collided", false);
  o.primary_only = j.value("primary_only", true);
  o.support_violation = j.value("support_violation", false);
  o.multi_violation = j.value("multi_violation", false);
  o.road_violation = j.value("road_violation", false);
  o.signal_violation = j.value("signal_violation", false);
  o.accel_violation = j.value("accel_violation", false);
  o.lat_accel_violation = j.value("lat_accel_violation", false);
  o.crash_obj_count = j.value("crash_obj_count", 0);
  o.cross_line_count = j.value("cross_line_count", 0);
  o.d_min = j.value("d_min", 0.0);
  o.kine_penalty = j.value("kine_penalty", 0.0);
  return o;
}

// Gate-derived outcome fields for an emitted scenario.
void fill_outcome_from_gates(ScenarioOutcome& o, const ScenarioGateReport& gates,
                             const std::vector<Trajectory>& adversaries, const Scene& scene,
                             const DynLimits& limits) {
  o.kine_penalty = 0.0;
  std::vector<double> seen_hits;
  for (const auto& [id, r] : gates.per_vehicle) {
    (void)id;
    o.kine_penalty += kinematic_penalty(r, limits);
    for (const Violation& v : r.violations) {
      switch (v.kind) {
        case ViolationKind::off_road: o.road_violation = true; break;
        case ViolationKind::red_signal: o.signal_violation = true; break;
        case ViolationKind::over_accel: o.accel_violation = true; break;
        case ViolationKind::over_lat_accel: o.lat_accel_violation = true; break;
        case ViolationKind::hit_background: seen_hits.push_back(v.magnitude); break;
        default: break;
      }
    }
  }
  o.crash_obj_count = static_cast<int>(seen_hits.size());
  o.cross_line_count = 0;
  for (const Trajectory& t : adversaries) {
    o.cross_line_count += cross_line_events(t, scene);
  }
}

json feedback_to_json(const Feedback& fb) {
  return json{{"collided", fb.collided},
              {"d_min", std::isfinite(fb.d_min) ? fb.d_min : 1e9},
              {"failure", to_string(fb.failure)},
              {"collision_frame", fb.collision_frame},
              {"collider_ids", fb.collider_ids},
              {"executed_ego", states_to_json(fb.executed_ego.states)}};
}

}  // namespace

SceneResult process_scene(const Scene& scene, const RunConfig& config, const KnowledgeBase& kb,
                          Expert& expert) {
  const auto t0 = std::chrono::steady_clock::now();
  SceneResult result;
  result.scene_id = scene.id;
  result.outcome.scene_id = scene.id;
  result.outcome.d_min = 1e9;

  const auto cands = shortlist(scene, config.engine.ranking.k_shortlist);
  json artifact{{"engine_version", kEngineVersion},
                {"scene_id", scene.id},
                {"seed", config.seed},
                {"controller", controller_to_json(config.controller)}};
  json run_log{{"scene_id", scene.id}, {"rounds", json::array()}};

  if (cands.empty()) {
    result.ok = true;
    artifact["adversaries"] = json::array();
    artifact["note"] = "no candidate vehicles";
    artifact["outcome"] = outcome_to_json(result.outcome);
    result.artifact = std::move(artifact);
    result.run_log = std::move(run_log);
    return result;
  }

  const ExpertResult expert_result =
      infer_guidance(expert, scene, cands, kb, config.engine.ranking);
  const Guidance& guidance = expert_result.guidance;
  artifact["expert"] = json{{"name", expert.name()},
                            {"fallback", expert_result.fallback},
                            {"fallback_reason", expert_result.fallback_reason}};
  artifact["guidance"] = guidance_to_json(guidance);

  const ClosedLoopResult cl = run_closed_loop(scene, guidance, config.controller, config.engine,
                                              scene_seed(config.seed, scene.id));

  json rounds = json::array();
  for (const RoundLog& r : cl.rounds) {
    json entry{{"round", r.round},
               {"profile", to_string(r.profile)},
               {"generated", r.generated},
               {"reject_reason", r.reject_reason},
               {"j_cl", r.j_cl},
               {"attribution_clean", r.attribution_clean},
               {"is_best", r.is_best},
               {"terminal_refined", r.terminal_refined}};
    if (r.generated) {
      entry["gates"] = scenario_gates_to_json(r.gates);
      entry["feedback"] = feedback_to_json(r.feedback);
    }
    rounds.push_back(std::move(entry));
  }
  run_log["rounds"] = std::move(rounds);
  run_log["best_round"] = cl.best_round;
  run_log["best_j"] = cl.feasible ? cl.best_j : 0.0;

  json adversaries = json::array();
  if (cl.best_round >= 0) {
    for (size_t i = 0; i < cl.best_adversaries.size(); ++i) {
      const Trajectory& t = cl.best_adversaries[i];
      std::string role = "primary";
      if (t.vehicle_id != guidance.primary_id) {
        const auto it = guidance.roles.find(t.vehicle_id);
        role = "support:" + std::string(it != guidance.roles.end() ? to_string(it->second)
                                                                   : "timing_shaper");
      }
      adversaries.push_back(json{{"vehicle_id", t.vehicle_id},
                                 {"role", role},
                                 {"states", states_to_json(t.states)}});
    }
    result.outcome.collided = cl.best_feedback.collided;
    result.outcome.primary_only = cl.best_attribution.primary_only;
    result.outcome.support_violation = cl.best_attribution.support_violation;
    result.outcome.multi_violation = cl.best_attribution.multi_violation;
    result.outcome.d_min = std::isfinite(cl.best_feedback.d_min) ? cl.best_feedback.d_min : 1e9;
    fill_outcome_from_gates(result.outcome, cl.best_gates, cl.best_adversaries, scene,
                            config.engine.limits);
    artifact["gates"] = scenario_gates_to_json(cl.best_gates);
    artifact["best_round"] = cl.best_round;

    for (const Trajectory& t : cl.best_adversaries) {
      result.generated.append(trajectory_signals(t.states, scene.dt));
    }
  } else {
    artifact["note"] = "no feasible adversarial scenario";
  }
  artifact["adversaries"] = std::move(adversaries);
  artifact["outcome"] = outcome_to_json(result.outcome);

  for (const Track& t : scene.others) {
    result.reference.append(track_signals(t, scene.dt));
  }

  result.artifact = std::move(artifact);
  result.run_log = std::move(run_log);
  result.ok = true;
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

std::vector<std::string> list_scenarios(const std::string& dir) {
  std::vector<std::string> files;
  if (!std::filesystem::is_directory(dir)) {
    return files;
  }
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int run_generate(const RunConfig& config, std::ostream& log, GenerateSummary* summary) {
  const auto files = list_scenarios(config.scenario_dir);
  if (files.empty()) {
    log << "error: no scenario files in '" << config.scenario_dir << "'\n";
    return 2;
  }
  KnowledgeBase kb;
  try {
    kb = config.kb_file.empty() ? builtin_knowledge_base() : load_knowledge_base(config.kb_file);
  } catch (const std::exception& e) {
    log << "error: knowledge base: " << e.what() << "\n";
    return 2;
  }

  std::vector<SceneResult> results(files.size());
  std::atomic<size_t> next{0};
  const int workers = std::max(1, std::min<int>(config.parallelism,
                                                static_cast<int>(files.size())));
  auto worker_fn = [&]() {
    auto expert = make_expert(config);
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= files.size()) {
        return;
      }
      SceneResult& r = results[i];
      r.scene_file = files[i];
      try {
        const Scene scene = load_scene(files[i]);
        r = process_scene(scene, config, kb, *expert);
        r.scene_file = files[i];
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
        r.scene_id = std::filesystem::path(files[i]).stem().string();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back(worker_fn);
  }
  for (std::thread& t : pool) {
    t.join();
  }

  const std::string out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir + "/scenarios");
  std::filesystem::create_directories(out_dir + "/logs");

  json scenes = json::array();
  int failed = 0;
  std::string timings = "scene_id,seconds\n";
  for (const SceneResult& r : results) {
    scenes.push_back(json{{"id", r.scene_id},
                          {"file", std::filesystem::path(r.scene_file).filename().string()},
                          {"ok", r.ok},
                          {"error", r.error}});
    if (!r.ok) {
      ++failed;
      log << "scene " << r.scene_id << " failed: " << r.error << "\n";
      if (summary != nullptr) {
        summary->errors.push_back(r.scene_id + ": " + r.error);
      }
      continue;
    }
    write_text_file(out_dir + "/scenarios/" + r.scene_id + ".json", canonical_dump(r.artifact));
    write_text_file(out_dir + "/logs/" + r.scene_id + ".json", canonical_dump(r.run_log));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s,%.3f\n", r.scene_id.c_str(), r.elapsed_seconds);
    timings += buf;
  }
  json manifest{{"engine_version", kEngineVersion},
                {"seed", config.seed},
                {"controller_kind", to_string(config.controller.kind)},
                {"config", config_to_json(config, /*echo=*/true)},
                {"scenes", std::move(scenes)}};
  write_text_file(out_dir + "/manifest.json", canonical_dump(manifest));
  if (config.write_timings) {
    write_text_file(out_dir + "/timings.csv", timings);
  }
  if (summary != nullptr) {
    summary->scenes = static_cast<int>(files.size());
    summary->failed = failed;
  }
  log << "generated " << (files.size() - static_cast<size_t>(failed)) << "/" << files.size()
      << " scenes into " << out_dir << "\n";
  return failed == 0 ? 0 : 3;
}

namespace {

struct LoadedArtifact {
  std::string scene_id;
  std::string scene_file;
  json artifact;
};

std::vector<LoadedArtifact> load_artifacts(const std::string& artifacts_dir, json* manifest_out) {
  const std::string manifest_path = artifacts_dir + "/manifest.json";
  json manifest = parse_json_file(manifest_path);
  if (manifest_out != nullptr) {
    *manifest_out = manifest;
  }
  std::vector<LoadedArtifact> out;
  for (const auto& s : manifest.at("scenes")) {
    if (!s.value("ok", false)) {
      continue;
    }
    LoadedArtifact a;
    a.scene_id = s.at("id").get<std::string>();
    a.scene_file = s.value("file", "");
    a.artifact = parse_json_file(artifacts_dir + "/scenarios/" + a.scene_id + ".json");
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(),
            [](const LoadedArtifact& a, const LoadedArtifact& b) { return a.scene_id < b.scene_id; });
  return out;
}

std::vector<Trajectory> artifact_trajectories(const json& artifact) {
  std::vector<Trajectory> out;
  for (const auto& adv : artifact.at("adversaries")) {
    Trajectory t;
    t.vehicle_id = adv.at("vehicle_id").get<int>();
    t.states = states_from_json(adv.at("states"));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<ScenarioOutcome> load_outcomes(const std::string& artifacts_dir) {
  std::vector<ScenarioOutcome> out;
  for (const LoadedArtifact& a : load_artifacts(artifacts_dir, nullptr)) {
    out.push_back(outcome_from_json(a.artifact.at("outcome")));
  }
  return out;
}

int run_evaluate(const RunConfig& config, const std::string& artifacts_dir,
                 const std::string& report_base, std::ostream& log) {
  json manifest;
  std::vector<LoadedArtifact> artifacts;
  try {
    artifacts = load_artifacts(artifacts_dir, &manifest);
  } catch (const std::exception& e) {
    log << "error: cannot load artifacts from '" << artifacts_dir << "': " << e.what() << "\n";
    return 2;
  }
  if (artifacts.empty()) {
    log << "error: no usable artifacts in '" << artifacts_dir << "'\n";
    return 2;
  }

  const json gen_controller = manifest.at("config").at("controller");
  const json eval_controller = controller_to_json(config.controller);
  const bool same_controller = gen_controller == eval_controller;

  std::vector<ScenarioOutcome> outcomes;
  SignalSamples generated, reference;
  for (const LoadedArtifact& a : artifacts) {
    try {
      const Scene scene = load_scene(config.scenario_dir + "/" + a.scene_file);
      const std::vector<Trajectory> adversaries = artifact_trajectories(a.artifact);
      ScenarioOutcome outcome;
      if (same_controller || adversaries.empty()) {
        outcome = outcome_from_json(a.artifact.at("outcome"));
      } else {
        // fixed trajectories re-executed under the evaluation controller
        outcome.scene_id = a.scene_id;
        const json& g = a.artifact.at("guidance");
        const int primary_id = g.at("primary_id").get<int>();
        std::vector<int> support_ids;
        for (const auto& sid : g.at("support_ids")) {
          support_ids.push_back(sid.get<int>());
        }
        const Feedback fb = rollout(scene, adversaries, config.controller, config.engine.limits,
                                    nullptr, config.engine.loop);
        const AttributionReport attr =
            check_attribution(fb.executed_ego, scene.ego.size, adversaries, scene, primary_id,
                              support_ids);
        outcome.collided = fb.collided;
        outcome.primary_only = attr.primary_only;
        outcome.support_violation = attr.support_violation;
        outcome.multi_violation = attr.multi_violation;
        outcome.d_min = std::isfinite(fb.d_min) ? fb.d_min : 1e9;
        const ScenarioGateReport gates =
            check_scenario(adversaries, scene, config.engine.limits,
                           config.engine.full_footprint_road);
        fill_outcome_from_gates(outcome, gates, adversaries, scene, config.engine.limits);
      }
      outcomes.push_back(outcome);
      for (const Trajectory& t : adversaries) {
        generated.append(trajectory_signals(t.states, scene.dt));
      }
      for (const Track& t : scene.others) {
        reference.append(track_signals(t, scene.dt));
      }
    } catch (const std::exception& e) {
      log << "error: artifact " << a.scene_id << ": " << e.what() << "\n";
      return 2;
    }
  }

  const MetricsSummary summary = summarize(outcomes, generated, reference);
  const uint64_t seed = manifest.value("seed", config.seed);
  emit_report(summary, config_to_json(config, /*echo=*/true), seed, report_base);
  log << "evaluated " << outcomes.size() << " scenes; asr=" << summary.asr
      << " qasr=" << summary.qasr << "\n";
  return 0;
}

int run_recovery(const std::string& baseline_dir, const std::string& evolved_dir,
                 const std::string& report_base, uint64_t seed, std::ostream& log) {
  json base_manifest, evo_manifest;
  std::vector<ScenarioOutcome> base, evo;
  try {
    for (const LoadedArtifact& a : load_artifacts(baseline_dir, &base_manifest)) {
      base.push_back(outcome_from_json(a.artifact.at("outcome")));
    }
    for (const LoadedArtifact& a : load_artifacts(evolved_dir, &evo_manifest)) {
      evo.push_back(outcome_from_json(a.artifact.at("outcome")));
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  const std::string base_ctrl = base_manifest.value("controller_kind", "?");
  const std::string evo_ctrl = evo_manifest.value("controller_kind", "?");
  if (base_ctrl != evo_ctrl) {
    log << "error: controller mismatch between runs (" << base_ctrl << " vs " << evo_ctrl << ")\n";
    return 2;
  }
  RecoveryGain gain;
  try {
    gain = recovery_gain(base, evo, 10000, seed);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  write_text_file(report_base + ".csv",
                  recovery_csv(base_ctrl, static_cast<int>(base.size()), gain));
  const json j{{"engine_version", kEngineVersion},
               {"controller", base_ctrl},
               {"scene_count", base.size()},
               {"asr_base", gain.base_asr},
               {"asr_evo", gain.evo_asr},
               {"gain", gain.gain},
               {"ci_low", gain.ci_low},
               {"ci_high", gain.ci_high},
               {"failed_set_recovery", gain.failed_set_recovery},
               {"resamples", 10000},
               {"seed", seed}};
  write_text_file(report_base + ".json", canonical_dump(j));
  log << "recovery gain " << gain.gain << " [" << gain.ci_low << ", " << gain.ci_high << "]\n";
  return 0;
}

}  // namespace advgen
