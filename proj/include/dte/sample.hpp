#pragma once

// Experiment data shared by every estimator: outcomes, binary treatment,
// covariate rows, and per-unit adjuster values.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dte {

// Warnings accumulated along a pipeline run; they end up in reports.
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

class Sample {
 public:
  // Validates and takes ownership. `x` is row-major with `p` columns.
  // Throws DegenerateDesignError when an arm is empty and std::invalid_argument
  // for non-finite outcomes, non-binary treatment or mismatched lengths.
  static Sample from_columns(std::vector<double> y, std::vector<int> d,
                             std::vector<double> x, std::size_t p);

  std::size_t size() const { return y_.size(); }
  std::size_t dim() const { return p_; }
  std::size_t n_treated() const { return n1_; }
  std::size_t n_control() const { return n0_; }
  double y_lo() const { return y_lo_; }
  double y_hi() const { return y_hi_; }

  double y(std::size_t i) const { return y_[i]; }
  int d(std::size_t i) const { return d_[i]; }
  std::span<const double> x(std::size_t i) const {
    return {x_.data() + i * p_, p_};
  }

  const std::vector<double>& outcomes() const { return y_; }
  const std::vector<int>& treatment() const { return d_; }
  const std::vector<double>& covariates() const { return x_; }

  // Units in the given order; keeps the scale flags.
  Sample subset(std::span<const std::size_t> idx) const;
  // Same design, new outcome vector (revalidated).
  Sample with_outcomes(std::vector<double> y) const;

  // Indices of treated / control units in row order.
  std::vector<std::size_t> arm_indices(int arm) const;

  // Set by squash_outcomes: bounds then refer to the transformed outcome.
  bool squashed() const { return squashed_; }
  // Cumulative shift added to control outcomes by shift_for_delta.
  double delta() const { return delta_; }

 private:
  friend Sample shift_for_delta(const Sample&, double);
  friend Sample squash_outcomes(const Sample&, Diagnostics*);

  Sample() = default;
  void finalize();

  std::vector<double> y_;
  std::vector<int> d_;
  std::vector<double> x_;
  std::size_t p_ = 0;
  std::size_t n1_ = 0;
  std::size_t n0_ = 0;
  double y_lo_ = 0.0;
  double y_hi_ = 0.0;
  bool squashed_ = false;
  double delta_ = 0.0;
};

enum class AdjusterLabel { zero, fitted_L, fitted_U, oracle, user };

const char* to_string(AdjusterLabel label);

// Per-unit evaluation of a covariate adjustment s(X_i).
struct Adjuster {
  std::vector<double> values;
  AdjusterLabel label = AdjusterLabel::zero;

  static Adjuster zeros(std::size_t n) {
    return {std::vector<double>(n, 0.0), AdjusterLabel::zero};
  }
  // Throws std::invalid_argument on non-finite values or a length mismatch.
  void validate(std::size_t n) const;
};

// Lower- and upper-bound adjusters evaluated on the same units.
struct AdjusterPair {
  Adjuster lower;
  Adjuster upper;
};

}  // namespace dte
