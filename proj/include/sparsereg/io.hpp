#ifndef SPARSEREG_IO_HPP
#define SPARSEREG_IO_HPP

// Flat key-value config files, text file helpers, and the CSV number format
// shared by every experiment driver.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sparsereg/dictionary.hpp"
#include "sparsereg/errors.hpp"
#include "sparsereg/geometry.hpp"

namespace sparsereg {

// CSV cell format used everywhere; %.10g keeps files compact and stable.
inline std::string g10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("cannot read file: " + path);
  return ss.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw DataError("cannot write file: " + path);
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_number(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw ConfigError("bad numeric value for '" + key + "': " + value);
  return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  const long r = std::lround(v);
  if (std::abs(v - double(r)) > 1e-9)
    throw ConfigError("'" + key + "' must be an integer, got " + value);
  return int(r);
}

}  // namespace detail

// Parses flat key-value text: one "key = value" (or "key value") pair per
// line, '#' starts a comment, blank lines are skipped. Later duplicates win.
inline std::map<std::string, std::string> parse_key_values(
    const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    size_t sep = line.find('=');
    if (sep == std::string::npos) sep = line.find_first_of(" \t");
    if (sep == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " has no value: " + line);
    const std::string key = detail::trim(line.substr(0, sep));
    const std::string value = detail::trim(line.substr(sep + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        " has an empty key or value");
    kv[key] = value;
  }
  return kv;
}

// Geometric scale ladder 2^{k*step_octaves} from 1 up to and including
// max_scale (appended when the ladder does not land on it exactly).
inline std::vector<double> scale_ladder(double step_octaves, double max_scale) {
  if (!(step_octaves > 0.0))
    throw ConfigError("scale step must be positive octaves");
  if (!(max_scale >= 1.0)) throw ConfigError("maximum scale must be >= 1");
  std::vector<double> scales;
  for (int k = 0;; ++k) {
    const double s = std::exp2(k * step_octaves);
    if (s > max_scale * (1.0 + 1e-9)) break;
    scales.push_back(s);
  }
  if (scales.back() < max_scale * (1.0 - 1e-9)) scales.push_back(max_scale);
  return scales;
}

// Applies recognized dictionary keys onto a base config. Keys: group
// (translation | se2 | sim2), nu, rot_step, scale_octaves, trans_step, width,
// height. scale_octaves builds the ladder from 1 up to min(width, height) / 4;
// the 99%-energy rule trims it further at build time. Unknown keys are
// errors so typos never pass silently.
inline DictionaryConfig dictionary_config_from(
    const std::map<std::string, std::string>& kv,
    DictionaryConfig base = {}) {
  double scale_octaves = 0.0;
  for (const auto& [key, value] : kv) {
    if (key == "group") {
      if (value == "translation") base.kind = GroupKind::Translation2D;
      else if (value == "se2") base.kind = GroupKind::SpecialEuclidean2D;
      else if (value == "sim2") base.kind = GroupKind::Similarity2D;
      else throw ConfigError("unknown group '" + value +
                             "' (expected translation, se2, or sim2)");
    } else if (key == "nu") {
      base.mother.nu = detail::parse_number(key, value);
      if (base.mother.nu < 1.0) throw ConfigError("nu must be >= 1");
    } else if (key == "rot_step") {
      base.rot_step = detail::parse_number(key, value);
      if (!(base.rot_step > 0.0) || base.rot_step > kPi)
        throw ConfigError("rot_step must lie in (0, pi]");
    } else if (key == "scale_octaves") {
      scale_octaves = detail::parse_number(key, value);
      if (!(scale_octaves > 0.0))
        throw ConfigError("scale_octaves must be positive");
    } else if (key == "trans_step") {
      base.trans_step = detail::parse_int(key, value);
      if (base.trans_step < 1) throw ConfigError("trans_step must be >= 1");
    } else if (key == "width") {
      base.width = detail::parse_int(key, value);
      if (base.width < 8) throw ConfigError("width must be >= 8");
    } else if (key == "height") {
      base.height = detail::parse_int(key, value);
      if (base.height < 8) throw ConfigError("height must be >= 8");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (scale_octaves > 0.0)
    base.scales =
        scale_ladder(scale_octaves, std::min(base.width, base.height) / 4.0);
  return base;
}

inline DictionaryConfig load_dictionary_config(const std::string& path,
                                               DictionaryConfig base = {}) {
  return dictionary_config_from(parse_key_values(read_text_file(path)),
                                std::move(base));
}

}  // namespace sparsereg

#endif  // SPARSEREG_IO_HPP
