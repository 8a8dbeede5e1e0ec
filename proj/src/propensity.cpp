#include "dte/propensity.hpp"

#include <map>

#include "dte/errors.hpp"

namespace dte {

const char* to_string(PropensityMode mode) {
  switch (mode) {
    case PropensityMode::in_sample: return "in_sample";
    case PropensityMode::constant_known: return "constant_known";
    case PropensityMode::group: return "group";
    case PropensityMode::known_function: return "known_function";
  }
  return "unknown";
}

PropensityMode parse_propensity_mode(const std::string& s) {
  if (s == "in_sample") return PropensityMode::in_sample;
  if (s == "constant_known") return PropensityMode::constant_known;
  if (s == "group") return PropensityMode::group;
  if (s == "known_function") return PropensityMode::known_function;
  throw ConfigError("propensity.mode: unknown value '" + s +
                    "' (valid: in_sample, constant_known, group, known_function)");
}

std::vector<double> PropensityModel::unit_propensities(const Sample& sample) const {
  const std::size_t n = sample.size();
  std::vector<double> p(n);
  switch (mode) {
    case PropensityMode::in_sample:
      std::fill(p.begin(), p.end(),
                static_cast<double>(sample.n_treated()) / static_cast<double>(n));
      break;
    case PropensityMode::constant_known:
      std::fill(p.begin(), p.end(), pi);
      break;
    case PropensityMode::group: {
      if (group_of.size() != n) throw ConfigError("group mode needs one group id per unit");
      std::map<int, std::pair<std::size_t, std::size_t>> counts;
      for (std::size_t i = 0; i < n; ++i) {
        auto& c = counts[group_of[i]];
        (sample.d(i) == 1 ? c.first : c.second)++;
      }
      for (auto& [g, c] : counts) {
        if (c.first == 0 || c.second == 0) {
          throw DegenerateDesignError("group " + std::to_string(g) + " has " +
                                      std::to_string(c.first) + " treated and " +
                                      std::to_string(c.second) + " control units");
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = counts[group_of[i]];
        p[i] = static_cast<double>(c.first) / static_cast<double>(c.first + c.second);
      }
      break;
    }
    case PropensityMode::known_function:
      if (p_of_x.size() != n) throw ConfigError("known_function mode needs one propensity per unit");
      p = p_of_x;
      break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] > epsilon && p[i] < 1.0 - epsilon)) {
      throw ConfigError("propensity " + std::to_string(p[i]) + " at row " + std::to_string(i + 1) +
                        " is outside (" + std::to_string(epsilon) + ", " +
                        std::to_string(1.0 - epsilon) + ")");
    }
  }
  return p;
}

}  // namespace dte
