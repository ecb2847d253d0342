#pragma once

#include <string>

#include <json.hpp>

namespace advgen {

// Canonical serialization used by every artifact this engine writes: object
// keys sorted (nlohmann's default map ordering), floating-point numbers with
// exactly 6 decimal places, no insignificant whitespace beyond 2-space
// indentation. Parsing a canonical document and re-dumping it is byte-exact.
std::string canonical_dump(const nlohmann::json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
nlohmann::json parse_json_file(const std::string& path);

}  // namespace advgen
