#pragma once

#include <stdexcept>
#include <string>

namespace dte {

// Invalid user configuration (bad flag values, unknown method, k too large).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One arm is empty, or a stratification cell required by the design is empty.
class DegenerateDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input row. `row()` is 1-based and counts data rows after the header.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// A numerical routine or learner failed while producing an estimate.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dte
