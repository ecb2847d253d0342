#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "advgen/scene.hpp"

namespace advgen {

// Deterministic scene generators used by the bundled corpus and the test
// suites. Every template produces a 9 s scenario (1 s observation + 8 s
// horizon) in world-frame scenario JSON.
enum class SceneTemplate { following, cut_in, crossing, crossing_signal, merge };

enum class CorpusMix { standard, recoverable };

nlohmann::json make_scene_json(SceneTemplate tmpl, uint64_t seed);
Scene make_scene(SceneTemplate tmpl, uint64_t seed, const std::string& id);

struct CorpusEntry {
  std::string id;
  nlohmann::json scenario;
};

std::vector<CorpusEntry> make_corpus(int count, uint64_t seed, CorpusMix mix);

// Writes <dir>/<id>.json for every corpus entry (canonical form).
void write_corpus(const std::string& dir, int count, uint64_t seed, CorpusMix mix);

}  // namespace advgen
