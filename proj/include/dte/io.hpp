#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dte/sample.hpp"

namespace dte {

struct CsvSchema {
  std::string y_col = "y";
  std::string d_col = "d";
  // Every header column starting with this prefix is a covariate, in header order.
  std::string x_prefix = "x";
  // Optional per-unit stratum for the group-propensity estimator.
  std::string group_col;
  // Optional per-unit known propensity p(X_i).
  std::string propensity_col;
};

struct Dataset {
  Sample sample;
  std::vector<std::string> covariate_names;
  std::vector<int> group;         // empty unless schema.group_col is set
  std::vector<double> propensity;  // empty unless schema.propensity_col is set
};

// Header row required, ',' separator, '.' decimal point. Missing values are
// rejected. Throws IoError (unreadable file), ParseError (row-level problems)
// and DegenerateDesignError (an arm is empty).
Dataset load_dataset(const std::string& path, const CsvSchema& schema);
Dataset read_dataset(std::istream& in, const CsvSchema& schema);

inline Sample load_csv(const std::string& path, const CsvSchema& schema) {
  return load_dataset(path, schema).sample;
}

// Reads the named numeric columns of a headed CSV file, one vector per name.
std::vector<std::vector<double>> read_columns(const std::string& path,
                                              const std::vector<std::string>& names);

// Writes y, d and covariates with shortest round-trip formatting, so reading
// the file back reproduces every double bit-for-bit.
void write_csv(std::ostream& out, const Sample& sample,
               const std::vector<std::string>& covariate_names = {});

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace dte
