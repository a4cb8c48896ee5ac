#pragma once

// Batch front end: `stscale <command> [--flag value ...] [--config file]`.
//
// Every config-file key has a flag of the same name with '_' spelled '-';
// flags override values read from --config.
//
// Exit codes: 0 success, 2 validation FAIL, 3 numerical failure, 4 bad input.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <map>
#include <type_traits>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stscale/errors.hpp"
#include "stscale/io.hpp"
#include "stscale/levy.hpp"
#include "stscale/montecarlo.hpp"
#include "stscale/spacetime.hpp"

namespace stscale::cli {

enum ExitCode : int { kOk = 0, kValidationFail = 2, kNumerical = 3, kBadInput = 4 };

/// One batch job, in the same shape as its `key = value` text form.
struct JobConfig {
  std::string command;
  std::string model = "generic";
  double alpha = 1.0;
  std::string hd = "1";
  LevySpec base{};
  double q = 0.0;
  double a = 0.0;
  double b = 1.0;
  double x = 0.5;
  double xp = 0.5;
  double lower = 0.0;
  std::size_t n = 1024;
  std::size_t paths = 10000;
  double dt = 1e-4;
  std::uint64_t seed = 1;
  bool bridge = true;
  std::size_t max_steps = 10'000'000;
  unsigned workers = 1;
  double allowance = 0.01;
  std::string out;
  std::string format = "csv";

  friend bool operator==(const JobConfig&, const JobConfig&) = default;
};

inline const std::vector<std::string>& job_keys() {
  static const std::vector<std::string> keys = {
      "command", "model", "alpha", "hd", "drift", "sigma", "jump_rate", "jump_decay", "kill_rate",
      "q", "a", "b", "x", "xp", "lower", "n", "paths", "dt", "seed", "bridge", "max_steps", "workers",
      "allowance", "out", "format"};
  return keys;
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"levy-scale", "scale-curve", "exit-ratio", "resolvent", "validate"};
  return c;
}

namespace detail {

template <class Int>
Int parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + text + "'");
  if (v > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) throw ConfigError("'" + key + "' is too large");
  return static_cast<Int>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text.empty() || text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + text + "'");
}

}  // namespace detail

inline KeyValues to_key_values(const JobConfig& j) {
  KeyValues kv;
  kv["command"] = j.command;
  kv["model"] = j.model;
  kv["alpha"] = format_double(j.alpha);
  kv["hd"] = j.hd;
  write_levy(kv, j.base);
  kv["q"] = format_double(j.q);
  kv["a"] = format_double(j.a);
  kv["b"] = format_double(j.b);
  kv["x"] = format_double(j.x);
  kv["xp"] = format_double(j.xp);
  kv["lower"] = format_double(j.lower);
  kv["n"] = std::to_string(j.n);
  kv["paths"] = std::to_string(j.paths);
  kv["dt"] = format_double(j.dt);
  kv["seed"] = std::to_string(j.seed);
  kv["bridge"] = j.bridge ? "true" : "false";
  kv["max_steps"] = std::to_string(j.max_steps);
  kv["workers"] = std::to_string(j.workers);
  kv["allowance"] = format_double(j.allowance);
  kv["out"] = j.out;
  kv["format"] = j.format;
  return kv;
}

inline std::string to_text(const JobConfig& j) { return stscale::to_key_values(to_key_values(j)); }

inline JobConfig from_key_values(const KeyValues& kv) {
  const auto& keys = job_keys();
  for (const auto& [k, v] : kv) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown key '" + k + "'");
  }
  JobConfig j;
  auto str = [&](const char* k, std::string& dst) {
    if (auto it = kv.find(k); it != kv.end()) dst = it->second;
  };
  auto num = [&](const char* k, double& dst) {
    if (auto it = kv.find(k); it != kv.end()) dst = parse_double(k, it->second);
  };
  auto count = [&](const char* k, auto& dst) {
    if (auto it = kv.find(k); it != kv.end()) dst = detail::parse_count<std::decay_t<decltype(dst)>>(k, it->second);
  };
  str("command", j.command);
  str("model", j.model);
  num("alpha", j.alpha);
  str("hd", j.hd);
  j.base = read_levy(kv);
  num("q", j.q);
  num("a", j.a);
  num("b", j.b);
  num("x", j.x);
  num("xp", j.xp);
  num("lower", j.lower);
  count("n", j.n);
  count("paths", j.paths);
  num("dt", j.dt);
  count("seed", j.seed);
  if (auto it = kv.find("bridge"); it != kv.end()) j.bridge = detail::parse_bool("bridge", it->second);
  count("max_steps", j.max_steps);
  count("workers", j.workers);
  num("allowance", j.allowance);
  str("out", j.out);
  str("format", j.format);
  return j;
}

inline JobConfig parse_job_text(std::string_view text) { return from_key_values(parse_key_values(text)); }

inline ModelSpec model_of(const JobConfig& j) {
  KeyValues kv;
  kv["model"] = j.model;
  kv["alpha"] = format_double(j.alpha);
  kv["hd"] = j.hd;
  write_levy(kv, j.base);
  return read_model(kv);
}

inline MCConfig mc_config_of(const JobConfig& j) {
  MCConfig c;
  c.seed = j.seed;
  c.n_paths = j.paths;
  c.dt = j.dt;
  c.bridge_correction = j.bridge;
  c.max_steps = j.max_steps;
  c.workers = j.workers;
  return c;
}

namespace detail {

inline void require_n(const JobConfig& j) {
  if (j.n < 2) throw ConfigError("--n must be >= 2");
}

inline void require_window(const JobConfig& j) {
  if (!(j.a < j.x && j.x <= j.b)) throw ConfigError("--a, --x, --b must satisfy a < x <= b");
}

inline nlohmann::json inputs_json(const JobConfig& j) {
  nlohmann::json in;
  in["model"] = j.model;
  in["alpha"] = j.alpha;
  in["hd"] = j.hd;
  in["drift"] = j.base.drift;
  in["sigma"] = j.base.sigma;
  in["jump_rate"] = j.base.jump_rate;
  in["jump_decay"] = j.base.jump_decay;
  in["kill_rate"] = j.base.kill_rate;
  in["q"] = j.q;
  return in;
}

/// Writes `body` to j.out, if given.
inline void emit(const JobConfig& j, const std::string& body) {
  if (j.out.empty()) return;
  std::ofstream f(j.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open --out path '" + j.out + "'");
  f << body;
  if (!f) throw ConfigError("failed writing '" + j.out + "'");
}

inline int run_levy_scale(const JobConfig& j, std::ostream& out) {
  const ScaleFunction w = scale_closed_form(j.base, j.q);
  const double value = w(j.x);
  if (j.format == "json") {
    nlohmann::json doc;
    doc["q"] = j.q;
    doc["x"] = j.x;
    doc["value"] = value;
    doc["w_at_zero"] = w.w_at_zero();
    doc["phi"] = phi(j.base, j.q);
    for (const auto& t : w.terms())
      doc["terms"].push_back({{"coeff", {t.coeff.real(), t.coeff.imag()}},
                              {"rate", {t.rate.real(), t.rate.imag()}},
                              {"power", t.power}});
    emit(j, doc.dump(2) + "\n");
  } else {
    emit(j, "x,value\n" + format_double(j.x) + "," + format_double(value) + "\n");
  }
  out << format_double(value) << "\n";
  return kOk;
}

inline int run_scale_curve(const JobConfig& j, std::ostream& out) {
  require_n(j);
  const ModelSpec m = model_of(j);
  const ScaleTable t = scale_curve(m, j.q, j.a, j.lower, j.n);
  if (j.format == "json") {
    nlohmann::json doc = to_json(t);
    doc["inputs"] = inputs_json(j);
    doc["inputs"]["a"] = j.a;
    doc["inputs"]["lower"] = j.lower;
    emit(j, doc.dump(2) + "\n");
  } else {
    std::ostringstream os;
    write_csv(os, t);
    emit(j, os.str());
  }
  out << "scale-curve model=" << j.model << " q=" << format_double(j.q) << " nodes=" << t.values.size()
      << " value_at_lower=" << format_double(t.values.front()) << " est_error=" << format_double(t.est_error)
      << "\n";
  return kOk;
}

inline int run_exit_ratio(const JobConfig& j, std::ostream& out) {
  require_n(j);
  require_window(j);
  const ExitRatio r = exit_ratio(model_of(j), j.q, j.a, j.x, j.b, j.n);
  if (j.format == "json") {
    nlohmann::json doc;
    doc["inputs"] = inputs_json(j);
    doc["inputs"]["a"] = j.a;
    doc["inputs"]["x"] = j.x;
    doc["inputs"]["b"] = j.b;
    doc["inputs"]["n"] = j.n;
    doc["value"] = r.value;
    doc["est_error"] = r.est_error;
    emit(j, doc.dump(2) + "\n");
  } else {
    emit(j, "value,est_error\n" + format_double(r.value) + "," + format_double(r.est_error) + "\n");
  }
  out << format_double(r.value) << "\n";
  return kOk;
}

inline int run_resolvent(const JobConfig& j, std::ostream& out) {
  require_n(j);
  if (!(j.a < j.b)) throw ConfigError("--a must be below --b");
  if (!(j.x > j.a && j.x < j.b)) throw ConfigError("--x must lie in (a, b)");
  if (!(j.xp > j.a && j.xp <= j.b)) throw ConfigError("--xp must lie in (a, b]");
  const double v = resolvent_density(model_of(j), j.q, j.a, j.b, j.x, j.xp, j.n);
  if (j.format == "json") {
    nlohmann::json doc;
    doc["inputs"] = inputs_json(j);
    doc["inputs"]["a"] = j.a;
    doc["inputs"]["b"] = j.b;
    doc["inputs"]["x"] = j.x;
    doc["inputs"]["xp"] = j.xp;
    doc["inputs"]["n"] = j.n;
    doc["value"] = v;
    emit(j, doc.dump(2) + "\n");
  } else {
    emit(j, "value\n" + format_double(v) + "\n");
  }
  out << format_double(v) << "\n";
  return kOk;
}

/// Monte Carlo exit functional against the Volterra prediction.  The report
/// file holds only deterministic content; wall-clock time goes to stdout.
inline int run_validate(const JobConfig& j, std::ostream& out) {
  require_n(j);
  require_window(j);
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec m = model_of(j);
  const MCConfig cfg = mc_config_of(j);
  const ExitRatio predicted = exit_ratio(m, j.q, j.a, j.x, j.b, j.n);
  const MCEstimate est = simulate_exit_functional(m, j.q, j.x, j.a, j.b, cfg);
  const Verdict v = compare(est, predicted.value, j.allowance);
  const bool pass = v.pass && !est.unreliable;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json doc;
  doc["command"] = "validate";
  doc["functional"] = "exit";
  doc["inputs"] = inputs_json(j);
  doc["inputs"]["a"] = j.a;
  doc["inputs"]["x"] = j.x;
  doc["inputs"]["b"] = j.b;
  doc["inputs"]["n"] = j.n;
  doc["inputs"]["paths"] = j.paths;
  doc["inputs"]["dt"] = j.dt;
  doc["inputs"]["seed"] = j.seed;
  doc["inputs"]["bridge"] = j.bridge;
  doc["inputs"]["max_steps"] = j.max_steps;
  doc["inputs"]["allowance"] = j.allowance;
  doc["predicted"] = predicted.value;
  doc["predicted_est_error"] = predicted.est_error;
  doc["estimate"] = to_json(est);
  doc["z"] = v.z;
  doc["verdict"] = pass ? "PASS" : "FAIL";
  emit(j, doc.dump(2) + "\n");

  out << "validate " << (pass ? "PASS" : "FAIL") << " predicted=" << format_double(predicted.value)
      << " mean=" << format_double(est.mean) << " stderr=" << format_double(est.std_error)
      << " truncated=" << est.truncated_paths << " wall_clock_s=" << format_double(seconds) << "\n";
  return pass ? kOk : kValidationFail;
}

inline std::string flag_of(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read --config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Execute one job; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Scale functions of space-time changed spectrally negative Levy processes"};
  std::string command;
  std::string config_path;
  std::map<std::string, std::string> flags;
  app.add_option("command", command, "levy-scale | scale-curve | exit-ratio | resolvent | validate");
  app.add_option("--config", config_path, "key = value file; flags override its entries");
  for (const auto& key : job_keys()) {
    if (key == "command") continue;
    auto* opt = app.add_option(detail::flag_of(key), flags[key]);
    if (key == "bridge") opt->expected(0, 1);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    KeyValues kv;
    if (!config_path.empty()) kv = parse_key_values(detail::read_file(config_path));
    for (const auto& key : job_keys()) {
      if (key == "command") continue;
      if (app.count(detail::flag_of(key)) > 0) kv[key] = flags[key];
    }
    if (!command.empty()) kv["command"] = command;
    const JobConfig job = from_key_values(kv);
    if (job.format != "csv" && job.format != "json") throw ConfigError("--format must be csv or json");

    if (job.command == "levy-scale") return detail::run_levy_scale(job, out);
    if (job.command == "scale-curve") return detail::run_scale_curve(job, out);
    if (job.command == "exit-ratio") return detail::run_exit_ratio(job, out);
    if (job.command == "resolvent") return detail::run_resolvent(job, out);
    if (job.command == "validate") return detail::run_validate(job, out);
    throw ConfigError("unknown command '" + job.command + "'");
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace stscale::cli
