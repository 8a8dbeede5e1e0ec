#pragma once

// Flat key = value run configuration shared by the command-line front end.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace dte {

struct RunConfig {
  std::string subcommand = "analyze";
  std::string input;
  std::string output;      // path prefix for report files; empty writes to stdout
  std::string format = "text";  // stdout format for analyze: text | json

  std::string y_col = "y";
  std::string d_col = "d";
  std::string x_prefix = "x";
  std::string group_col;
  std::string propensity_col;

  double alpha = 0.05;
  double delta = 0.0;
  std::string method = "cross-fit";
  std::string model = "constant";
  int k_folds = 5;
  int cv_folds = 5;
  double aux_fraction = 0.5;
  std::string propensity_mode = "in_sample";
  double propensity_pi = 0.5;
  double propensity_epsilon = 1e-3;
  std::string h_rule = "loglog";
  std::uint64_t seed = 1;
  std::string grid = "random_normal";
  std::size_t grid_size = 10000;
  bool squash = false;
  std::string adjusters;  // CSV with s_L, s_U columns, one row per unit
  double flat_fraction = 0.25;

  std::string cells;  // simulate: cell list file
  std::size_t reps = 1000;
  std::size_t theta0_reps = 1000000;
  std::size_t oracle_inner_reps = 2000;
  unsigned threads = 0;
};

const std::vector<std::string>& method_names();
const std::vector<std::string>& config_keys();

// Sets one field from text. Throws ConfigError naming the key on bad input.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// "key = value" lines, '#' comments; or a JSON object (a report's "config"
// member is used when present), so a report can be fed back in.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Range and membership checks. Throws ConfigError.
void validate(const RunConfig& cfg);

// Every key with its resolved value, as strings.
std::map<std::string, std::string> config_entries(const RunConfig& cfg);
nlohmann::ordered_json config_json(const RunConfig& cfg);

}  // namespace dte
