#pragma once

namespace advgen {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace advgen
