#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "advgen/closed_loop.hpp"
#include "advgen/metrics.hpp"

namespace advgen {

struct ExpertChoice {
  bool remote = false;
  std::string address;  // host:port when remote
};

struct RunConfig {
  std::string scenario_dir;
  std::string kb_file;      // empty = builtin knowledge base
  std::string output_dir = "out";
  ExpertChoice expert;
  ControllerSpec controller;
  EngineSettings engine;
  uint64_t seed = 1;
  int parallelism = 1;
  bool write_timings = false;  // timings are diagnostics, never part of the
                               // deterministic artifact surface
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
// Full config with defaults filled in. `echo` mode drops execution-only
// fields (parallelism, output paths) so reports stay byte-identical across
// worker counts.
nlohmann::json config_to_json(const RunConfig& config, bool echo = false);

struct SceneResult {
  std::string scene_id;
  std::string scene_file;
  bool ok = false;
  std::string error;
  ScenarioOutcome outcome;
  nlohmann::json artifact;   // scenario artifact JSON
  nlohmann::json run_log;    // per-round log JSON
  SignalSamples generated;   // per-frame signals of emitted adversaries
  SignalSamples reference;   // logged non-ego signals
  double elapsed_seconds = 0.0;
};

// Full single-scene pipeline: shortlist -> expert guidance -> closed-loop
// generation -> attribution/outcome assembly.
SceneResult process_scene(const Scene& scene, const RunConfig& config, const KnowledgeBase& kb,
                          Expert& expert);

// Derived per-scene seed; independent of worker count and scene order.
uint64_t scene_seed(uint64_t run_seed, const std::string& scene_id);

struct GenerateSummary {
  int scenes = 0;
  int failed = 0;
  std::vector<std::string> errors;
};

// Runs the corpus through process_scene with a worker pool and writes
// scenarios/, logs/ and manifest.json under config.output_dir. Exit-code
// semantics: 0 ok, 2 data error (bad inputs), 3 partial failure.
int run_generate(const RunConfig& config, std::ostream& log, GenerateSummary* summary = nullptr);

// Computes outcomes from generated artifacts (re-rolling out under a
// different controller when requested) and writes report.csv/report.json.
int run_evaluate(const RunConfig& config, const std::string& artifacts_dir,
                 const std::string& report_base, std::ostream& log);

// Paired recovery evaluation between two artifact directories (same corpus,
// same controller, different loop budgets).
int run_recovery(const std::string& baseline_dir, const std::string& evolved_dir,
                 const std::string& report_base, uint64_t seed, std::ostream& log);

// Per-scene outcomes reconstructed from an artifact directory.
std::vector<ScenarioOutcome> load_outcomes(const std::string& artifacts_dir);

std::unique_ptr<Expert> make_expert(const RunConfig& config);

}  // namespace advgen
