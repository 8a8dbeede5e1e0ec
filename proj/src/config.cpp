#include "dte/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dte/cond_cdf.hpp"
#include "dte/errors.hpp"
#include "dte/io.hpp"
#include "dte/propensity.hpp"
#include "dte/stoye.hpp"

namespace dte {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> m = {"sample-split", "cross-fit", "sjls",
                                             "cross-fit-group", "cross-fit-ipw", "cross-fit-foldt"};
  return m;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> k = {
      "subcommand", "input", "output", "format", "column.y", "column.d", "column.x_prefix",
      "column.group", "column.propensity", "alpha", "delta", "method", "model", "k_folds",
      "cv_folds", "aux_fraction", "propensity.mode", "propensity.pi", "propensity.epsilon",
      "h_rule", "seed", "grid", "grid_size", "squash", "adjusters", "flat_fraction", "cells",
      "reps", "theta0_reps", "oracle_inner_reps", "threads"};
  return k;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    std::size_t pos = 0;
    const auto u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "subcommand") c.subcommand = v;
  else if (key == "input") c.input = v;
  else if (key == "output") c.output = v;
  else if (key == "format") c.format = v;
  else if (key == "column.y") c.y_col = v;
  else if (key == "column.d") c.d_col = v;
  else if (key == "column.x_prefix") c.x_prefix = v;
  else if (key == "column.group") c.group_col = v;
  else if (key == "column.propensity") c.propensity_col = v;
  else if (key == "alpha") c.alpha = to_double(key, v);
  else if (key == "delta") c.delta = to_double(key, v);
  else if (key == "method") c.method = v;
  else if (key == "model") c.model = v;
  else if (key == "k_folds") c.k_folds = static_cast<int>(to_uint(key, v));
  else if (key == "cv_folds") c.cv_folds = static_cast<int>(to_uint(key, v));
  else if (key == "aux_fraction") c.aux_fraction = to_double(key, v);
  else if (key == "propensity.mode") c.propensity_mode = v;
  else if (key == "propensity.pi") c.propensity_pi = to_double(key, v);
  else if (key == "propensity.epsilon") c.propensity_epsilon = to_double(key, v);
  else if (key == "h_rule") c.h_rule = v;
  else if (key == "seed") c.seed = to_uint(key, v);
  else if (key == "grid") c.grid = v;
  else if (key == "grid_size") c.grid_size = to_uint(key, v);
  else if (key == "squash") c.squash = to_bool(key, v);
  else if (key == "adjusters") c.adjusters = v;
  else if (key == "flat_fraction") c.flat_fraction = to_double(key, v);
  else if (key == "cells") c.cells = v;
  else if (key == "reps") c.reps = to_uint(key, v);
  else if (key == "theta0_reps") c.theta0_reps = to_uint(key, v);
  else if (key == "oracle_inner_reps") c.oracle_inner_reps = to_uint(key, v);
  else if (key == "threads") c.threads = static_cast<unsigned>(to_uint(key, v));
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(t);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    for (auto it = j.begin(); it != j.end(); ++it) {
      out[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
    }
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    out[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  return out;
}

void validate(const RunConfig& c) {
  if (c.subcommand != "analyze" && c.subcommand != "simulate" && c.subcommand != "bounds-curve") {
    throw ConfigError("subcommand: must be analyze, simulate or bounds-curve");
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
  if (!std::isfinite(c.delta)) throw ConfigError("delta: must be finite");
  if (std::find(method_names().begin(), method_names().end(), c.method) == method_names().end()) {
    std::string valid;
    for (const auto& m : method_names()) valid += (valid.empty() ? "" : ", ") + m;
    throw ConfigError("method: unknown value '" + c.method + "' (valid: " + valid + ")");
  }
  if (c.model != "oracle") parse_model_list(c.model);
  if (c.k_folds < 2) throw ConfigError("k_folds: must be at least 2");
  if (c.cv_folds < 2) throw ConfigError("cv_folds: must be at least 2");
  if (!(c.aux_fraction > 0.0 && c.aux_fraction < 1.0)) throw ConfigError("aux_fraction: must lie in (0, 1)");
  parse_propensity_mode(c.propensity_mode);
  if (!(c.propensity_pi > 0.0 && c.propensity_pi < 1.0)) throw ConfigError("propensity.pi: must lie in (0, 1)");
  if (!(c.propensity_epsilon >= 0.0 && c.propensity_epsilon < 0.5)) {
    throw ConfigError("propensity.epsilon: must lie in [0, 0.5)");
  }
  parse_h_rule(c.h_rule);
  if (c.grid != "random_normal" && c.grid != "equispaced") {
    throw ConfigError("grid: must be random_normal or equispaced");
  }
  if (c.grid_size == 0) throw ConfigError("grid_size: must be positive");
  if (c.format != "text" && c.format != "json") throw ConfigError("format: must be text or json");
  if (!(c.flat_fraction > 0.0)) throw ConfigError("flat_fraction: must be positive");
  if (c.subcommand == "simulate") {
    if (c.reps == 0) throw ConfigError("reps: must be positive");
    if (c.cells.empty()) throw ConfigError("cells: a cell list file is required for simulate");
  } else if (c.input.empty()) {
    throw ConfigError("input: a data file is required");
  }
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : config_json(c).items()) m[k] = v.get<std::string>();
  return m;
}

nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["subcommand"] = c.subcommand;
  j["input"] = c.input;
  j["output"] = c.output;
  j["format"] = c.format;
  j["column.y"] = c.y_col;
  j["column.d"] = c.d_col;
  j["column.x_prefix"] = c.x_prefix;
  j["column.group"] = c.group_col;
  j["column.propensity"] = c.propensity_col;
  j["alpha"] = format_double(c.alpha);
  j["delta"] = format_double(c.delta);
  j["method"] = c.method;
  j["model"] = c.model;
  j["k_folds"] = std::to_string(c.k_folds);
  j["cv_folds"] = std::to_string(c.cv_folds);
  j["aux_fraction"] = format_double(c.aux_fraction);
  j["propensity.mode"] = c.propensity_mode;
  j["propensity.pi"] = format_double(c.propensity_pi);
  j["propensity.epsilon"] = format_double(c.propensity_epsilon);
  j["h_rule"] = c.h_rule;
  j["seed"] = std::to_string(c.seed);
  j["grid"] = c.grid;
  j["grid_size"] = std::to_string(c.grid_size);
  j["squash"] = c.squash ? "true" : "false";
  j["adjusters"] = c.adjusters;
  j["flat_fraction"] = format_double(c.flat_fraction);
  j["cells"] = c.cells;
  j["reps"] = std::to_string(c.reps);
  j["theta0_reps"] = std::to_string(c.theta0_reps);
  j["oracle_inner_reps"] = std::to_string(c.oracle_inner_reps);
  j["threads"] = std::to_string(c.threads);
  return j;
}

}  // namespace dte
