#pragma once

// Ensemble configs (JSON), grids and provenance for the rmtcorr tool.
//
// Ensemble schema, unknown keys rejected at every level:
//   {"N": 4, "family": "gaussian", "scale": 1.0}
//   {"N": 4, "family": "norm_dependent", "spread": SPREAD}
//   {"N": 4, "family": "higher_trace", "M1": 4, "M2": 1, "b": "auto"}
// SPREAD is one of
//   {"kind": "spike", "t0": 0.5}
//   {"kind": "gamma", "shape": 6.0, "scale": 0.2}
//   {"kind": "tabulated", "t": [...], "f": [...]}  or  {"kind": "tabulated", "csv": "file.csv"}
//   {"kind": "distributional", "terms": [{"t0": 0.5, "order": 0, "weight": 1.0}, ...]}
// A relative csv path is resolved against the config file's directory.

#include <rmtsusy/ensembles.hpp>
#include <rmtsusy/errors.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace rmtcorr {

using json = nlohmann::json;
using rmtsusy::ConfigurationError;

inline void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigurationError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigurationError(where + ": unknown field '" + key + "'");
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigurationError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigurationError(where + ": field '" + key + "' has the wrong type");
  }
}

// Two numeric columns t, f; a non-numeric first line is taken as a header.
inline rmtsusy::SpreadFunction read_spread_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open spread table " + path.string());
  std::vector<double> t, f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a, b;
    if (!(row >> a >> b)) {
      if (lineno == 1) continue;
      throw ConfigurationError(path.string() + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    t.push_back(a);
    f.push_back(b);
  }
  return rmtsusy::SpreadFunction::tabulated(std::move(t), std::move(f));
}

inline rmtsusy::SpreadFunction parse_spread(const json& j, const std::filesystem::path& base) {
  using rmtsusy::SpreadFunction;
  const std::string where = "spread";
  auto kind = get_field<std::string>(j, "kind", where);
  if (kind == "spike") {
    require_keys(j, {"kind", "t0"}, where);
    return SpreadFunction::spike(get_field<double>(j, "t0", where));
  }
  if (kind == "gamma") {
    require_keys(j, {"kind", "shape", "scale"}, where);
    return SpreadFunction::gamma(get_field<double>(j, "shape", where), get_field<double>(j, "scale", where));
  }
  if (kind == "tabulated") {
    require_keys(j, {"kind", "t", "f", "csv"}, where);
    if (j.contains("csv")) {
      if (j.contains("t") || j.contains("f")) throw ConfigurationError("spread: give either csv or t/f arrays");
      std::filesystem::path p = get_field<std::string>(j, "csv", where);
      return read_spread_csv(p.is_relative() ? base / p : p);
    }
    return SpreadFunction::tabulated(get_field<std::vector<double>>(j, "t", where),
                                     get_field<std::vector<double>>(j, "f", where));
  }
  if (kind == "distributional") {
    require_keys(j, {"kind", "terms"}, where);
    std::vector<rmtsusy::SpreadTerm> terms;
    for (const auto& t : get_field<json>(j, "terms", where)) {
      require_keys(t, {"t0", "order", "weight"}, "spread term");
      terms.push_back({get_field<double>(t, "t0", "spread term"), get_field<int>(t, "order", "spread term"),
                       get_field<double>(t, "weight", "spread term")});
    }
    return SpreadFunction::distributional(std::move(terms));
  }
  throw ConfigurationError("spread: unknown kind '" + kind + "' (spike|gamma|tabulated|distributional)");
}

inline rmtsusy::EnsembleSpec parse_ensemble(const json& j, const std::filesystem::path& base = ".") {
  using rmtsusy::EnsembleSpec;
  const std::string where = "ensemble";
  auto family = get_field<std::string>(j, "family", where);
  const int N = get_field<int>(j, "N", where);
  EnsembleSpec spec;
  if (family == "gaussian") {
    require_keys(j, {"N", "family", "scale"}, where);
    spec = EnsembleSpec::gaussian(N, j.contains("scale") ? get_field<double>(j, "scale", where) : 1.0);
  } else if (family == "norm_dependent") {
    require_keys(j, {"N", "family", "spread"}, where);
    spec = EnsembleSpec::norm_dependent(N, parse_spread(get_field<json>(j, "spread", where), base));
  } else if (family == "higher_trace") {
    require_keys(j, {"N", "family", "M1", "M2", "b"}, where);
    std::optional<double> b;
    if (j.contains("b") && !(j.at("b").is_string() && j.at("b") == "auto")) b = get_field<double>(j, "b", where);
    spec = EnsembleSpec::higher_trace(N, get_field<int>(j, "M1", where), get_field<int>(j, "M2", where), b);
  } else {
    throw ConfigurationError("ensemble: unknown family '" + family + "' (gaussian|norm_dependent|higher_trace)");
  }
  spec.validate();
  return spec;
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

struct Grid {
  double lo = 0.0, hi = 0.0;
  int count = 1;

  double at(int i) const { return count == 1 ? lo : lo + (hi - lo) * i / (count - 1); }
};

// lo:hi:count, count >= 1 points including both ends.
inline Grid parse_grid(const std::string& s) {
  std::istringstream in(s);
  std::string a, b, c;
  if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) || a.empty() || b.empty() ||
      c.empty())
    throw ConfigurationError("grid '" + s + "': expected lo:hi:count");
  Grid g;
  try {
    std::size_t pa, pb, pc;
    g.lo = std::stod(a, &pa);
    g.hi = std::stod(b, &pb);
    g.count = std::stoi(c, &pc);
    if (pa != a.size() || pb != b.size() || pc != c.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigurationError("grid '" + s + "': expected lo:hi:count with numeric fields");
  }
  if (g.count < 1) throw ConfigurationError("grid '" + s + "': count must be >= 1");
  if (g.count > 1 && !(g.hi > g.lo)) throw ConfigurationError("grid '" + s + "': need lo < hi");
  return g;
}

// "+-" style signature, one character per point.
inline std::vector<int> parse_metric(const std::string& s, int k) {
  std::string t;
  for (char c : s)
    if (c != ' ') t += c;
  if (t.empty()) return std::vector<int>(k, 1);
  if (static_cast<int>(t.size()) != k) throw ConfigurationError("metric '" + s + "': need one sign per point");
  std::vector<int> out;
  for (char c : t) {
    if (c != '+' && c != '-') throw ConfigurationError("metric '" + s + "': use + and - only");
    out.push_back(c == '+' ? 1 : -1);
  }
  return out;
}

// FNV-1a, stable across platforms.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream o;
  o << std::hex;
  o.width(16);
  o.fill('0');
  o << h;
  return o.str();
}

}  // namespace rmtcorr
