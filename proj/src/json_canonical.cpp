#include "advgen/json_canonical.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace advgen {

namespace {

void format_double(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += v > 0 ? "1e999" : "-1e999";  // never produced by the engine
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  if (buf[0] == '-') {
    // normalize -0.000000
    bool all_zero = true;
    for (const char* c = buf + 1; *c != '\0'; ++c) {
      if (*c != '0' && *c != '.') {
        all_zero = false;
        break;
      }
    }
    if (all_zero) {
      out += buf + 1;
      return;
    }
  }
  out += buf;
}

void dump_rec(const nlohmann::json& j, std::string& out, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += pad_in;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        dump_rec(it.value(), out, indent + 1);
        if (i + 1 < j.size()) {
          out += ',';
        }
        out += '\n';
      }
      out += pad;
      out += '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Flat arrays of numbers stay on one line (track frames, polylines).
      bool scalar_only = true;
      for (const auto& e : j) {
        if (e.is_structured()) {
          scalar_only = false;
          break;
        }
      }
      if (scalar_only) {
        out += '[';
        for (size_t i = 0; i < j.size(); ++i) {
          if (i > 0) {
            out += ", ";
          }
          dump_rec(j[i], out, indent);
        }
        out += ']';
        return;
      }
      out += "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        out += pad_in;
        dump_rec(j[i], out, indent + 1);
        if (i + 1 < j.size()) {
          out += ',';
        }
        out += '\n';
      }
      out += pad;
      out += ']';
      return;
    }
    case nlohmann::json::value_t::number_float:
      format_double(out, j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  dump_rec(j, out, 0);
  out += '\n';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  f << content;
  if (!f) {
    throw std::runtime_error("write failed: " + path);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot open: " + path);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json parse_json_file(const std::string& path) {
  return nlohmann::json::parse(read_text_file(path));
}

}  // namespace advgen
