#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "advgen/scene.hpp"

namespace advgen {

struct SceneParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SceneValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses and validates a scenario JSON file. File coordinates are world-frame
// and converted to the ego-anchored scene frame here. Gaps of up to 3
// consecutive missing frames are interpolated; longer gaps truncate the track
// (ego tracks must be fully present).
Scene load_scene(const std::string& path);
Scene scene_from_json(const nlohmann::json& j, const std::string& scene_id);

// World-frame canonical form: keys sorted, floats with 6 decimals.
nlohmann::json scene_to_json(const Scene& scene);
std::string save_scene_canonical(const Scene& scene);

}  // namespace advgen
