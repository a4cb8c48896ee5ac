#pragma once

// Text forms: `key = value` specs, CSV/JSON for solved curves, and JSON
// validation reports.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stscale/errors.hpp"
#include "stscale/levy.hpp"
#include "stscale/montecarlo.hpp"
#include "stscale/spacetime.hpp"
#include "stscale/volterra.hpp"

namespace stscale {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline double parse_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("'" + key + "' expects a number, got '" + std::string(text) + "'");
  return v;
}

/// Ordered `key = value` pairs.  Blank lines and `#` comments are skipped.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

inline std::string to_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline void write_levy(KeyValues& kv, const LevySpec& s) {
  kv["drift"] = format_double(s.drift);
  kv["sigma"] = format_double(s.sigma);
  kv["jump_rate"] = format_double(s.jump_rate);
  kv["jump_decay"] = format_double(s.jump_decay);
  kv["kill_rate"] = format_double(s.kill_rate);
}

inline LevySpec read_levy(const KeyValues& kv) {
  LevySpec s;
  auto get = [&](const char* key, double& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = parse_double(key, it->second);
  };
  get("drift", s.drift);
  get("sigma", s.sigma);
  get("jump_rate", s.jump_rate);
  get("jump_decay", s.jump_decay);
  get("kill_rate", s.kill_rate);
  return s;
}

inline std::string model_name(ModelKind k) {
  switch (k) {
    case ModelKind::Generic: return "generic";
    case ModelKind::PSSMP: return "pssmp";
    case ModelKind::NSSMP: return "nssmp";
    case ModelKind::CSBP: return "csbp";
  }
  return "generic";
}

/// Builds a model from `model`, `alpha`, `hd` and the Levy block.  `generic`
/// means the plain Levy process (no space or time change).
inline ModelSpec read_model(const KeyValues& kv) {
  const LevySpec base = read_levy(kv);
  std::string name = "generic";
  if (auto it = kv.find("model"); it != kv.end()) name = it->second;
  double alpha = 1.0;
  if (auto it = kv.find("alpha"); it != kv.end()) alpha = parse_double("alpha", it->second);
  ReferenceDensity hd;
  if (auto it = kv.find("hd"); it != kv.end()) hd = ReferenceDensity::parse(it->second);
  if (name == "generic") return ModelSpec::generic(base, {SpaceMap::Identity, {}, hd});
  if (name == "pssmp") return ModelSpec::pssmp(base, alpha, hd);
  if (name == "nssmp") return ModelSpec::nssmp(base, alpha, hd);
  if (name == "csbp") return ModelSpec::csbp(base, hd);
  throw InvalidSpec("model must be one of generic, pssmp, nssmp, csbp; got '" + name + "'");
}

inline void write_model(KeyValues& kv, const ModelSpec& m) {
  kv["model"] = model_name(m.kind);
  kv["alpha"] = format_double(m.change.clock.alpha);
  kv["hd"] = m.change.density.to_text();
  write_levy(kv, m.base);
}

/// CSV with header `u,y,value`, one row per node.
inline void write_csv(std::ostream& os, const ScaleTable& t) {
  os << "u,y,value\n";
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double y = i < t.native_nodes.size() ? t.native_nodes[i] : t.grid.node(i);
    os << format_double(t.grid.node(i)) << ',' << format_double(y) << ',' << format_double(t.values[i]) << '\n';
  }
}

inline nlohmann::json to_json(const ScaleTable& t) {
  nlohmann::json j;
  j["q"] = t.q;
  j["grid"] = {{"lower", t.grid.lower()}, {"anchor", t.grid.anchor()}, {"n", t.grid.intervals()}, {"h", t.grid.step()}};
  j["est_error"] = t.est_error;
  std::vector<double> u(t.values.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = t.grid.node(i);
  j["u"] = u;
  j["y"] = t.native_nodes;
  j["value"] = t.values;
  return j;
}

inline nlohmann::json to_json(const MCEstimate& e) {
  nlohmann::json j;
  j["mean"] = e.mean;
  j["stderr"] = e.std_error;
  j["n"] = e.n;
  j["truncated_paths"] = e.truncated_paths;
  j["unreliable"] = e.unreliable;
  return j;
}

}  // namespace stscale
