#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace advgen {

// Per-scene evaluation record assembled from the emitted scenario, its gate
// reports, and the rollout attribution.
struct ScenarioOutcome {
  std::string scene_id;
  bool collided = false;
  bool primary_only = true;
  bool support_violation = false;
  bool multi_violation = false;
  bool road_violation = false;
  bool signal_violation = false;
  bool accel_violation = false;
  bool lat_accel_violation = false;
  int crash_obj_count = 0;
  int cross_line_count = 0;
  double d_min = 0.0;
  double kine_penalty = 0.0;
};

struct MetricsSummary {
  int scene_count = 0;
  double asr = 0.0;
  double primary_match = 0.0;          // PrimaryOnly over collided scenes
  double valid_primary_attack = 0.0;   // scene-wise Table-V definition
  double qasr = 0.0;                   // aggregate product
  double qasr_scenewise = 0.0;
  double multi_collision_rate = 0.0;
  double support_violation_rate = 0.0;
  double crash_obj = 0.0;
  double cross_line = 0.0;
  double kine_pen = 0.0;
  double accel_viol = 0.0;
  double lat_accel_viol = 0.0;
  double road_dep = 0.0;
  double signal_viol = 0.0;
  double wd_accel = 0.0;
  double wd_vel = 0.0;
  double wd_yaw = 0.0;
};

// Mean of the collided flags. Throws std::invalid_argument when empty.
double asr(const std::vector<ScenarioOutcome>& outcomes);

struct QasrBreakdown {
  double asr = 0.0;
  double primary_only = 1.0;  // over collided scenes; 1 when none collided
  double support_vio = 0.0;   // over all scenes
  double multi_vio = 0.0;     // over all scenes
  double qasr = 0.0;          // asr * primary_only * (1-sv) * (1-mv)
  double valid_primary_attack = 0.0;
  double qasr_scenewise = 0.0;
};

QasrBreakdown qasr(const std::vector<ScenarioOutcome>& outcomes);

struct RecoveryGain {
  double base_asr = 0.0;
  double evo_asr = 0.0;
  double gain = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  // fraction of base-failing scenes converted by the evolved run
  double failed_set_recovery = 0.0;
};

// Scene-level paired bootstrap (percentile method). Outcome sets must cover
// the same scene ids; throws std::invalid_argument otherwise.
RecoveryGain recovery_gain(const std::vector<ScenarioOutcome>& base,
                           const std::vector<ScenarioOutcome>& evo, int resamples = 10000,
                           uint64_t seed = 7);

// Exact empirical 1-Wasserstein distance. Throws on empty input.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

// Per-frame kinematic signals pooled for the distributional metrics.
struct SignalSamples {
  std::vector<double> accel;
  std::vector<double> vel;
  std::vector<double> yaw_rate;

  void append(const SignalSamples& other);
};

struct PenaltySummary {
  double crash_obj = 0.0;
  double cross_line = 0.0;
  double kine_pen = 0.0;
  double accel_viol = 0.0;
  double lat_accel_viol = 0.0;
  double road_dep = 0.0;
  double signal_viol = 0.0;
};

PenaltySummary penalties(const std::vector<ScenarioOutcome>& outcomes);

MetricsSummary summarize(const std::vector<ScenarioOutcome>& outcomes,
                         const SignalSamples& generated, const SignalSamples& reference);

// CSV column order is the external contract; JSON carries the same fields
// plus config echo, seed, and engine version.
std::string report_csv(const MetricsSummary& summary);
nlohmann::json report_json(const MetricsSummary& summary, const nlohmann::json& config_echo,
                           uint64_t seed);

void emit_report(const MetricsSummary& summary, const nlohmann::json& config_echo, uint64_t seed,
                 const std::string& path_base);

std::string recovery_csv(const std::string& controller, int scene_count, const RecoveryGain& g);

}  // namespace advgen
