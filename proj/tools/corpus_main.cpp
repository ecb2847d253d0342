// Synthetic scenario corpus generator; a companion utility to the main CLI.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "advgen/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic traffic-scenario corpus generator"};
  std::string out_dir = "corpus";
  int count = 50;
  uint64_t seed = 1;
  std::string mix = "standard";
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--count", count, "Number of scenes")->capture_default_str();
  app.add_option("--seed", seed, "Corpus seed")->capture_default_str();
  app.add_option("--mix", mix, "Scene mix: standard | recoverable")
      ->check(CLI::IsMember({"standard", "recoverable"}))
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    advgen::write_corpus(out_dir, count, seed,
                         mix == "recoverable" ? advgen::CorpusMix::recoverable
                                              : advgen::CorpusMix::standard);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << count << " scenes to " << out_dir << "\n";
  return 0;
}
