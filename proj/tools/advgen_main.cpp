// Batch CLI for the adversarial scenario generation engine.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 partial failure.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "advgen/json_canonical.hpp"
#include "advgen/knowledge.hpp"
#include "advgen/metrics.hpp"
#include "advgen/pipeline.hpp"
#include "advgen/version.hpp"

namespace {

using advgen::RunConfig;

RunConfig resolve_config(const std::string& config_path, const std::string& scenario_dir,
                         const std::string& output_dir, int parallelism, int64_t seed,
                         int r_max) {
  RunConfig config;
  if (!config_path.empty()) {
    config = advgen::load_config(config_path);
  }
  if (!scenario_dir.empty()) {
    config.scenario_dir = scenario_dir;
  }
  if (!output_dir.empty()) {
    config.output_dir = output_dir;
  }
  if (parallelism > 0) {
    config.parallelism = parallelism;
  }
  if (seed >= 0) {
    config.seed = static_cast<uint64_t>(seed);
  }
  if (r_max >= 0) {
    config.engine.loop.r_max = r_max;
  }
  return config;
}

int cmd_kb_validate(const std::string& kb_path, double horizon) {
  advgen::KnowledgeBase kb;
  try {
    kb = kb_path.empty() ? advgen::builtin_knowledge_base()
                         : advgen::load_knowledge_base(kb_path);
  } catch (const std::exception& e) {
    std::cerr << "invalid knowledge base: " << e.what() << "\n";
    return 2;
  }
  int errors = 0;
  std::array<int, advgen::kCollisionModeCount> coverage{};
  for (size_t i = 0; i < kb.entries.size(); ++i) {
    const advgen::KnowledgeEntry& e = kb.entries[i];
    coverage[static_cast<size_t>(e.mode)]++;
    if (!(e.guidance_template.window_start >= 0.0 &&
          e.guidance_template.window_start < e.guidance_template.window_end &&
          e.guidance_template.window_end <= horizon + 1e-9)) {
      std::cout << "entry " << i << " (" << advgen::to_string(e.mode)
                << "): invalid time window [" << e.guidance_template.window_start << ", "
                << e.guidance_template.window_end << "]\n";
      ++errors;
    }
    if (e.condition.min_vehicles < 1) {
      std::cout << "entry " << i << ": min_vehicles must be >= 1\n";
      ++errors;
    }
  }
  std::cout << "kb version: " << kb.version << "\n";
  std::cout << "mode coverage:\n";
  for (int m = 0; m < advgen::kCollisionModeCount; ++m) {
    const auto mode = static_cast<advgen::CollisionMode>(m);
    std::cout << "  " << advgen::to_string(mode) << ": " << coverage[static_cast<size_t>(m)]
              << (coverage[static_cast<size_t>(m)] == 0 ? "  (warning: unused mode)" : "")
              << "\n";
  }
  if (errors > 0) {
    std::cout << errors << " invalid entries\n";
    return 2;
  }
  std::cout << "all " << kb.entries.size() << " entries valid\n";
  return 0;
}

int cmd_report_plot(const std::string& report_path, const std::string& out_path) {
  nlohmann::json report;
  try {
    report = advgen::parse_json_file(report_path);
  } catch (const std::exception& e) {
    std::cerr << "cannot read report: " << e.what() << "\n";
    return 2;
  }
  if (!report.contains("metrics")) {
    std::cerr << "not a metrics report: " << report_path << "\n";
    return 2;
  }
  const nlohmann::json& m = report["metrics"];
  const std::vector<std::pair<std::string, std::string>> bars = {
      {"asr", "ASR"},
      {"primary_match", "Primary match"},
      {"valid_primary_attack", "Valid primary attack"},
      {"qasr", "QASR"},
      {"multi_collision_rate", "Multi-collision"},
      {"support_violation_rate", "Support violation"},
      {"road_dep", "Road departure"},
      {"signal_viol", "Signal violation"}};
  const int bar_h = 24, gap = 8, label_w = 170, plot_w = 300;
  const int height = static_cast<int>(bars.size()) * (bar_h + gap) + gap;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(label_w + plot_w + 80) + "\" height=\"" +
                    std::to_string(height) + "\" font-family=\"monospace\" font-size=\"12\">\n";
  int y = gap;
  for (const auto& [key, label] : bars) {
    const double v = m.value(key, 0.0);
    const int w = static_cast<int>(v * plot_w);
    svg += "<text x=\"4\" y=\"" + std::to_string(y + 16) + "\">" + label + "</text>\n";
    svg += "<rect x=\"" + std::to_string(label_w) + "\" y=\"" + std::to_string(y) +
           "\" width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(bar_h) +
           "\" fill=\"#4477aa\"/>\n";
    char val[32];
    std::snprintf(val, sizeof(val), "%.4f", v);
    svg += "<text x=\"" + std::to_string(label_w + w + 6) + "\" y=\"" + std::to_string(y + 16) +
           "\">" + val + "</text>\n";
    y += bar_h + gap;
  }
  svg += "</svg>\n";
  try {
    advgen::write_text_file(out_path, svg);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-guided adversarial traffic-scenario generation engine"};
  app.set_version_flag("--version", advgen::kEngineVersion);
  app.require_subcommand(1);

  std::string config_path, scenario_dir, output_dir, artifacts_dir, report_base;
  std::string baseline_dir, evolved_dir, kb_path, report_path, plot_out;
  int parallelism = 0;
  int64_t seed = -1;
  int r_max = -1;
  double kb_horizon = 8.0;

  CLI::App* generate = app.add_subcommand("generate", "Generate adversarial scenarios");
  generate->add_option("--config", config_path, "Run config JSON");
  generate->add_option("--scenarios", scenario_dir, "Scenario directory (overrides config)");
  generate->add_option("--out", output_dir, "Output directory (overrides config)");
  generate->add_option("--parallelism", parallelism, "Worker count (overrides config)");
  generate->add_option("--seed", seed, "Run seed (overrides config)");
  generate->add_option("--r-max", r_max, "Closed-loop retry rounds (overrides config)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate generated artifacts");
  evaluate->add_option("--config", config_path, "Run config JSON");
  evaluate->add_option("--scenarios", scenario_dir, "Scenario directory (overrides config)");
  evaluate->add_option("--artifacts", artifacts_dir, "Artifact directory from generate");
  evaluate->add_option("--report", report_base, "Report path base (default <artifacts>/report)");
  evaluate->add_option("--baseline", baseline_dir, "Baseline artifacts (paired recovery mode)");
  evaluate->add_option("--evolved", evolved_dir, "Evolved artifacts (paired recovery mode)");
  evaluate->add_option("--seed", seed, "Bootstrap seed (recovery mode)");

  CLI::App* kb = app.add_subcommand("kb", "Knowledge-base utilities");
  kb->require_subcommand(1);
  CLI::App* kb_validate = kb->add_subcommand("validate", "Validate a knowledge-base file");
  kb_validate->add_option("--kb", kb_path, "KB file (default: builtin)");
  kb_validate->add_option("--horizon", kb_horizon, "Horizon seconds for window checks")
      ->capture_default_str();

  CLI::App* params = app.add_subcommand("params", "Configuration utilities");
  params->require_subcommand(1);
  CLI::App* params_dump = params->add_subcommand("dump", "Print the effective configuration");
  params_dump->add_option("--config", config_path, "Run config JSON");

  CLI::App* report = app.add_subcommand("report", "Report utilities");
  report->require_subcommand(1);
  CLI::App* report_plot = report->add_subcommand("plot", "Render a metrics report as SVG");
  report_plot->add_option("--report", report_path, "report.json path")->required();
  report_plot->add_option("--out", plot_out, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) {
      const RunConfig config =
          resolve_config(config_path, scenario_dir, output_dir, parallelism, seed, r_max);
      return advgen::run_generate(config, std::cout);
    }
    if (evaluate->parsed()) {
      if (!baseline_dir.empty() || !evolved_dir.empty()) {
        if (baseline_dir.empty() || evolved_dir.empty()) {
          std::cerr << "recovery mode needs both --baseline and --evolved\n";
          return 1;
        }
        const std::string base = report_base.empty() ? evolved_dir + "/recovery" : report_base;
        return advgen::run_recovery(baseline_dir, evolved_dir, base,
                                    seed >= 0 ? static_cast<uint64_t>(seed) : 7, std::cout);
      }
      if (artifacts_dir.empty()) {
        std::cerr << "evaluate needs --artifacts (or --baseline/--evolved)\n";
        return 1;
      }
      RunConfig config = resolve_config(config_path, scenario_dir, output_dir, 0, seed, -1);
      const std::string base = report_base.empty() ? artifacts_dir + "/report" : report_base;
      return advgen::run_evaluate(config, artifacts_dir, base, std::cout);
    }
    if (kb_validate->parsed()) {
      return cmd_kb_validate(kb_path, kb_horizon);
    }
    if (params_dump->parsed()) {
      RunConfig config;
      if (!config_path.empty()) {
        config = advgen::load_config(config_path);
      }
      std::cout << advgen::canonical_dump(advgen::config_to_json(config, /*echo=*/false));
      return 0;
    }
    if (report_plot->parsed()) {
      const std::string out = plot_out.empty() ? report_path + ".svg" : plot_out;
      return cmd_report_plot(report_path, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
