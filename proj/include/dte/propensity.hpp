#pragma once

#include <string>
#include <vector>

#include "dte/sample.hpp"

namespace dte {

enum class PropensityMode { in_sample, constant_known, group, known_function };

const char* to_string(PropensityMode mode);
PropensityMode parse_propensity_mode(const std::string& s);

struct PropensityModel {
  PropensityMode mode = PropensityMode::in_sample;
  double pi = 0.5;              // constant_known
  std::vector<int> group_of;    // group
  std::vector<double> p_of_x;   // known_function
  double epsilon = 1e-3;

  // Per-unit treatment probabilities. in_sample gives n1/n for everyone, group
  // gives the treated share of each unit's group. Throws ConfigError when a
  // value leaves (epsilon, 1 - epsilon) or required inputs are missing, and
  // DegenerateDesignError when a group lacks treated or control units.
  std::vector<double> unit_propensities(const Sample& sample) const;
};

}  // namespace dte
