#pragma once

// Two-sided confidence interval for a partially identified parameter with
// critical values from a coverage-constrained length minimization.

#include <string>

#include "dte/bounds.hpp"

namespace dte {

// Pretest threshold sequences h_n.
enum class HRule {
  loglog,    // n^{-1/2} (log log n)^{1/2}
  log,       // n^{-1/2} (log n)^{1/2}
  q_loglog,  // n^{-1/2} (Q log log n)^{1/2}, Q = 2
};

const char* to_string(HRule rule);
HRule parse_h_rule(const std::string& s);
double h_threshold(HRule rule, std::size_t n);

// Pretested interval length: the estimated width when it exceeds h_n, else 0.
double stoye_lambda(double width, double h_n);

struct StoyeInterval {
  HRule rule = HRule::loglog;
  double h_n = 0.0;
  double lambda = 0.0;
  double c_L = 0.0;
  double c_U = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  bool empty = false;
  bool degenerate = false;  // a standard error was 0; Bonferroni values used
};

// P(Z1 >= -cL, Z2 <= cU + aU) and P(Z1 >= -cL - aL, Z2 <= cU) for standard
// normals with correlation rho.
double stoye_coverage_lower(double cL, double cU, double rho, double aU);
double stoye_coverage_upper(double cL, double cU, double rho, double aL);

struct StoyeCritical {
  double c_L = 0.0;
  double c_U = 0.0;
};

// Minimizes sigma_L cL + sigma_U cU subject to both coverages >= 1 - alpha,
// over cL, cU in [z_alpha, z_{alpha/2}]. Throws EstimationError with the last
// iterate and residuals if the solution fails the constraints.
StoyeCritical stoye_critical(double sigma_L, double sigma_U, double sigma_LU, double lambda,
                             std::size_t n, double alpha);

StoyeInterval stoye_ci(const BoundsEstimate& est, double alpha, HRule rule);

}  // namespace dte
