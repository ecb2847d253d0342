#include "advgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "advgen/json_canonical.hpp"
#include "advgen/rng.hpp"
#include "advgen/version.hpp"

namespace advgen {

double asr(const std::vector<ScenarioOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("asr: empty outcome set");
  }
  double sum = 0.0;
  for (const ScenarioOutcome& o : outcomes) {
    sum += o.collided ? 1.0 : 0.0;
  }
  return sum / static_cast<double>(outcomes.size());
}

QasrBreakdown qasr(const std::vector<ScenarioOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("qasr: empty outcome set");
  }
  QasrBreakdown out;
  out.asr = asr(outcomes);
  const double n = static_cast<double>(outcomes.size());
  int collided = 0, primary_only = 0, support_vio = 0, multi_vio = 0, valid = 0, scenewise = 0;
  for (const ScenarioOutcome& o : outcomes) {
    if (o.collided) {
      ++collided;
      if (o.primary_only) {
        ++primary_only;
      }
    }
    if (o.support_violation) {
      ++support_vio;
    }
    if (o.multi_violation) {
      ++multi_vio;
    }
    const bool valid_attack = o.collided && o.primary_only && !o.support_violation &&
                              !o.multi_violation && !o.road_violation && !o.signal_violation;
    if (valid_attack) {
      ++valid;
    }
    if (o.collided && o.primary_only && !o.support_violation && !o.multi_violation) {
      ++scenewise;
    }
  }
  out.primary_only = collided > 0 ? static_cast<double>(primary_only) / collided : 1.0;
  out.support_vio = support_vio / n;
  out.multi_vio = multi_vio / n;
  out.qasr = out.asr * out.primary_only * (1.0 - out.support_vio) * (1.0 - out.multi_vio);
  out.valid_primary_attack = valid / n;
  out.qasr_scenewise = scenewise / n;
  return out;
}

RecoveryGain recovery_gain(const std::vector<ScenarioOutcome>& base,
                           const std::vector<ScenarioOutcome>& evo, int resamples,
                           uint64_t seed) {
  if (base.empty() || base.size() != evo.size()) {
    throw std::invalid_argument("recovery_gain: outcome sets are not paired");
  }
  std::map<std::string, bool> base_by_id;
  for (const ScenarioOutcome& o : base) {
    base_by_id[o.scene_id] = o.collided;
  }
  if (base_by_id.size() != base.size()) {
    throw std::invalid_argument("recovery_gain: duplicate scene ids");
  }
  std::vector<double> diffs;  // per-scene paired differences
  diffs.reserve(evo.size());
  int base_failed = 0, recovered = 0;
  for (const ScenarioOutcome& o : evo) {
    const auto it = base_by_id.find(o.scene_id);
    if (it == base_by_id.end()) {
      throw std::invalid_argument("recovery_gain: scene " + o.scene_id + " missing from base set");
    }
    diffs.push_back((o.collided ? 1.0 : 0.0) - (it->second ? 1.0 : 0.0));
    if (!it->second) {
      ++base_failed;
      recovered += o.collided ? 1 : 0;
    }
  }

  RecoveryGain out;
  out.base_asr = asr(base);
  out.evo_asr = asr(evo);
  out.gain = out.evo_asr - out.base_asr;
  out.failed_set_recovery =
      base_failed > 0 ? static_cast<double>(recovered) / base_failed : 0.0;

  const size_t n = diffs.size();
  SplitMix64 rng(seed);
  std::vector<double> samples(static_cast<size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      sum += diffs[rng.below(n)];
    }
    samples[static_cast<size_t>(b)] = sum / static_cast<double>(n);
  }
  std::sort(samples.begin(), samples.end());
  const auto percentile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, samples.size() - 1);
    const double u = pos - static_cast<double>(lo);
    return samples[lo] + (samples[hi] - samples[lo]) * u;
  };
  out.ci_low = percentile(0.025);
  out.ci_high = percentile(0.975);
  return out;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wasserstein_1d: empty sample set");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n = a.size(), m = b.size();
  // integer mass units of 1/(n*m): a[i] holds m units, b[j] holds n units
  size_t i = 0, j = 0;
  uint64_t ra = m, rb = n;
  double total = 0.0;
  while (i < n && j < m) {
    const uint64_t take = std::min(ra, rb);
    total += static_cast<double>(take) * std::fabs(a[i] - b[j]);
    ra -= take;
    rb -= take;
    if (ra == 0) {
      ++i;
      ra = m;
    }
    if (rb == 0) {
      ++j;
      rb = n;
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(m));
}

void SignalSamples::append(const SignalSamples& other) {
  accel.insert(accel.end(), other.accel.begin(), other.accel.end());
  vel.insert(vel.end(), other.vel.begin(), other.vel.end());
  yaw_rate.insert(yaw_rate.end(), other.yaw_rate.begin(), other.yaw_rate.end());
}

PenaltySummary penalties(const std::vector<ScenarioOutcome>& outcomes) {
  PenaltySummary out;
  if (outcomes.empty()) {
    return out;
  }
  const double n = static_cast<double>(outcomes.size());
  for (const ScenarioOutcome& o : outcomes) {
    out.crash_obj += o.crash_obj_count;
    out.cross_line += o.cross_line_count;
    out.kine_pen += o.kine_penalty;
    out.accel_viol += o.accel_violation ? 1.0 : 0.0;
    out.lat_accel_viol += o.lat_accel_violation ? 1.0 : 0.0;
    out.road_dep += o.road_violation ? 1.0 : 0.0;
    out.signal_viol += o.signal_violation ? 1.0 : 0.0;
  }
  out.crash_obj /= n;
  out.cross_line /= n;
  out.kine_pen /= n;
  out.accel_viol /= n;
  out.lat_accel_viol /= n;
  out.road_dep /= n;
  out.signal_viol /= n;
  return out;
}

MetricsSummary summarize(const std::vector<ScenarioOutcome>& outcomes,
                         const SignalSamples& generated, const SignalSamples& reference) {
  MetricsSummary s;
  s.scene_count = static_cast<int>(outcomes.size());
  if (outcomes.empty()) {
    return s;
  }
  const QasrBreakdown q = qasr(outcomes);
  s.asr = q.asr;
  s.primary_match = q.primary_only;
  s.valid_primary_attack = q.valid_primary_attack;
  s.qasr = q.qasr;
  s.qasr_scenewise = q.qasr_scenewise;
  s.multi_collision_rate = q.multi_vio;
  s.support_violation_rate = q.support_vio;
  const PenaltySummary p = penalties(outcomes);
  s.crash_obj = p.crash_obj;
  s.cross_line = p.cross_line;
  s.kine_pen = p.kine_pen;
  s.accel_viol = p.accel_viol;
  s.lat_accel_viol = p.lat_accel_viol;
  s.road_dep = p.road_dep;
  s.signal_viol = p.signal_viol;
  if (!generated.accel.empty() && !reference.accel.empty()) {
    s.wd_accel = wasserstein_1d(generated.accel, reference.accel);
  }
  if (!generated.vel.empty() && !reference.vel.empty()) {
    s.wd_vel = wasserstein_1d(generated.vel, reference.vel);
  }
  if (!generated.yaw_rate.empty() && !reference.yaw_rate.empty()) {
    s.wd_yaw = wasserstein_1d(generated.yaw_rate, reference.yaw_rate);
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string report_csv(const MetricsSummary& s) {
  std::string out =
      "scene_count,asr,primary_match,valid_primary_attack,qasr,multi_collision_rate,"
      "support_violation_rate,crash_obj,cross_line,kine_pen,accel_viol,lat_accel_viol,"
      "road_dep,signal_viol,wd_accel,wd_vel,wd_yaw\n";
  out += std::to_string(s.scene_count);
  for (double v : {s.asr, s.primary_match, s.valid_primary_attack, s.qasr,
                   s.multi_collision_rate, s.support_violation_rate, s.crash_obj, s.cross_line,
                   s.kine_pen, s.accel_viol, s.lat_accel_viol, s.road_dep, s.signal_viol,
                   s.wd_accel, s.wd_vel, s.wd_yaw}) {
    out += ',';
    out += fmt(v);
  }
  out += '\n';
  return out;
}

nlohmann::json report_json(const MetricsSummary& s, const nlohmann::json& config_echo,
                           uint64_t seed) {
  nlohmann::json metrics{{"scene_count", s.scene_count},
                         {"asr", s.asr},
                         {"primary_match", s.primary_match},
                         {"valid_primary_attack", s.valid_primary_attack},
                         {"qasr", s.qasr},
                         {"qasr_scenewise", s.qasr_scenewise},
                         {"multi_collision_rate", s.multi_collision_rate},
                         {"support_violation_rate", s.support_violation_rate},
                         {"crash_obj", s.crash_obj},
                         {"cross_line", s.cross_line},
                         {"kine_pen", s.kine_pen},
                         {"accel_viol", s.accel_viol},
                         {"lat_accel_viol", s.lat_accel_viol},
                         {"road_dep", s.road_dep},
                         {"signal_viol", s.signal_viol},
                         {"wd_accel", s.wd_accel},
                         {"wd_vel", s.wd_vel},
                         {"wd_yaw", s.wd_yaw}};
  return nlohmann::json{{"engine_version", kEngineVersion},
                        {"seed", seed},
                        {"config", config_echo},
                        {"metrics", std::move(metrics)}};
}

void emit_report(const MetricsSummary& summary, const nlohmann::json& config_echo, uint64_t seed,
                 const std::string& path_base) {
  write_text_file(path_base + ".csv", report_csv(summary));
  write_text_file(path_base + ".json", canonical_dump(report_json(summary, config_echo, seed)));
}

std::string recovery_csv(const std::string& controller, int scene_count, const RecoveryGain& g) {
  std::string out =
      "controller,scene_count,asr_base,asr_evo,gain,ci_low,ci_high,failed_set_recovery\n";
  out += controller + "," + std::to_string(scene_count) + "," + fmt(g.base_asr) + "," +
         fmt(g.evo_asr) + "," + fmt(g.gain) + "," + fmt(g.ci_low) + "," + fmt(g.ci_high) + "," +
         fmt(g.failed_set_recovery) + "\n";
  return out;
}

}  // namespace advgen
