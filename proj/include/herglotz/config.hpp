#ifndef HERGLOTZ_CONFIG_HPP
#define HERGLOTZ_CONFIG_HPP

// Flat key/value config files describing an algebroid spec and (optionally)
// a Hamiltonian or Lagrangian. Example:
//
//   # so(3) with one corrupted entry
//   base_dim = 0
//   fiber_dim = 3
//   structure[1][2][3] = 1
//   structure[2][3][1] = 1
//   structure[3][1][2] = 1
//   hamiltonian = 0.5*(p1^2+p2^2+p3^2) + gamma*z
//   param.gamma = 0.5
//   box = -1, 1
//
// Indices are 1-based. Anchor/structure values are expressions in the base
// coordinates (default names q1..qn, overridable with `coords = ...`) and may
// reference parameters.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "herglotz/algebroid.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"

namespace herglotz {

struct SpecConfig {
  int base_dim = -1;
  int fiber_dim = -1;
  std::vector<std::string> coords;
  std::vector<std::string> sections;
  std::vector<std::tuple<int, int, std::string>> anchor_entries;        // i, a
  std::vector<std::tuple<int, int, int, std::string>> structure_entries;  // d, a, b
  std::string hamiltonian;  // empty = absent
  std::string lagrangian;
  std::map<std::string, double> params;
  double box_lo = -1.0;
  double box_hi = 1.0;

  /// Instantiates the algebroid (expression entries bound to coords+params).
  AlgebroidSpec build_spec() const {
    if (base_dim < 0 || fiber_dim < 1)
      throw InputError("config: base_dim and fiber_dim are required");
    AlgebroidBuilder b(base_dim, fiber_dim);
    std::vector<std::string> names = coords;
    if (!names.empty()) {
      b.coordinate_names(names);
    } else {
      for (int i = 0; i < base_dim; ++i)
        names.push_back("q" + std::to_string(i + 1));
    }
    if (!sections.empty()) b.section_names(sections);
    for (const auto& [i, a, text] : anchor_entries)
      b.anchor(i, a, std::make_shared<ExpressionField>(
                         ScalarField::parse(text, names, params)));
    for (const auto& [d, a, bb, text] : structure_entries)
      b.structure(d, a, bb, std::make_shared<ExpressionField>(
                                ScalarField::parse(text, names, params)));
    return b.build();
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

// parses "name[i][j]" or "name[i][j][k]"; returns indices (1-based in file)
inline std::vector<int> parse_indices(const std::string& key, std::size_t name_len,
                                      int count) {
  std::vector<int> idx;
  std::size_t pos = name_len;
  for (int k = 0; k < count; ++k) {
    if (pos >= key.size() || key[pos] != '[')
      throw InputError("config: malformed indexed key '" + key + "'");
    const auto close = key.find(']', pos);
    if (close == std::string::npos)
      throw InputError("config: malformed indexed key '" + key + "'");
    const std::string num = key.substr(pos + 1, close - pos - 1);
    try {
      idx.push_back(std::stoi(num) - 1);
    } catch (...) {
      throw InputError("config: bad index in '" + key + "'");
    }
    pos = close + 1;
  }
  if (pos != key.size())
    throw InputError("config: trailing characters in key '" + key + "'");
  return idx;
}

inline double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (trim(value.substr(used)).size())
      throw InputError("config: trailing characters after number in '" + key + "'");
    return v;
  } catch (const InputError&) {
    throw;
  } catch (...) {
    throw InputError("config: expected a number for '" + key + "'");
  }
}

}  // namespace config_detail

inline SpecConfig parse_spec_config(std::istream& in) {
  using namespace config_detail;
  SpecConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw InputError("config line " + std::to_string(lineno) +
                       ": empty key or value");

    if (key == "base_dim") {
      cfg.base_dim = static_cast<int>(parse_number(key, value));
    } else if (key == "fiber_dim") {
      cfg.fiber_dim = static_cast<int>(parse_number(key, value));
    } else if (key == "coords") {
      cfg.coords = split_list(value);
    } else if (key == "sections") {
      cfg.sections = split_list(value);
    } else if (key == "hamiltonian") {
      cfg.hamiltonian = value;
    } else if (key == "lagrangian") {
      cfg.lagrangian = value;
    } else if (key == "box") {
      const auto parts = split_list(value);
      if (parts.size() != 2)
        throw InputError("config: box expects 'lo, hi'");
      cfg.box_lo = parse_number(key, parts[0]);
      cfg.box_hi = parse_number(key, parts[1]);
      if (!(cfg.box_hi > cfg.box_lo))
        throw InputError("config: box upper bound must exceed the lower bound");
    } else if (key.rfind("param.", 0) == 0) {
      const std::string name = key.substr(6);
      if (name.empty()) throw InputError("config: empty parameter name");
      cfg.params[name] = parse_number(key, value);
    } else if (key.rfind("anchor[", 0) == 0) {
      const auto idx = parse_indices(key, 6, 2);
      cfg.anchor_entries.emplace_back(idx[0], idx[1], value);
    } else if (key.rfind("structure[", 0) == 0) {
      const auto idx = parse_indices(key, 9, 3);
      cfg.structure_entries.emplace_back(idx[0], idx[1], idx[2], value);
    } else {
      throw InputError("config line " + std::to_string(lineno) +
                       ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline SpecConfig load_spec_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  return parse_spec_config(in);
}

}  // namespace herglotz

#endif  // HERGLOTZ_CONFIG_HPP
