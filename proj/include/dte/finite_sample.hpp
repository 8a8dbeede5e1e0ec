#pragma once

// Sample-splitting bounds with distribution-free (DKW) confidence intervals.

#include <cstdint>
#include <vector>

#include "dte/bounds.hpp"
#include "dte/learners.hpp"

namespace dte {

struct SplitPlan {
  double aux_fraction = 0.5;
  std::vector<std::size_t> main;  // row order
  std::vector<std::size_t> aux;   // row order
  std::size_t main_treated = 0;
  std::size_t main_control = 0;
};

// Stratified by arm: round(aux_fraction * n_j) units of each arm go to the
// auxiliary part. Throws ConfigError if a main or auxiliary arm would be empty.
SplitPlan make_split(const Sample& sample, double aux_fraction, std::uint64_t seed);

// sqrt(log(2 / alpha) / 2) * (n1^{-1/2} + n0^{-1/2}).
double dkw_critical(double alpha, std::size_t n1_main, std::size_t n0_main);

struct SplitResult {
  double theta_L = 0.0;
  double theta_U = 1.0;
  double t_L = kMinusInf;
  double t_U = kMinusInf;
  double c_alpha = 0.0;
  double c_half_alpha = 0.0;
  Interval lower;      // [theta_L - c_alpha, 1], clipped
  Interval upper;      // [0, theta_U + c_alpha], clipped
  Interval two_sided;  // [theta_L - c_{alpha/2}, theta_U + c_{alpha/2}], clipped
  bool crossed = false;  // unclipped two-sided endpoints cross
  std::size_t main_treated = 0;
  std::size_t main_control = 0;
  double aux_fraction = 0.5;
  AdjusterFit fit;  // adjusters on the main units, in plan.main order
};

// Adjusters fitted on the auxiliary units, bounds computed on the main units.
SplitResult estimate_split(const Sample& sample, const SplitPlan& plan,
                           const AdjusterLearner& learner, double alpha, std::uint64_t seed,
                           Diagnostics* diag = nullptr);

}  // namespace dte
