#pragma once

#include <string>

#include "dte/ecdf.hpp"

namespace dte {

struct BoundsEstimate {
  double theta_L = 0.0;
  double theta_U = 1.0;
  double t_L = kMinusInf;
  double t_U = kMinusInf;
  double sigma2_L = 0.0;
  double sigma2_U = 0.0;
  double sigma_LU = 0.0;
  double pi_hat = 0.5;
  std::size_t n = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

inline double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Point bounds (no variances) from the s = 0 curve.
BoundsEstimate makarov_bounds(const Sample& sample);

// Point bounds from a curve: theta_L = sup Delta, theta_U = 1 + inf Delta.
BoundsEstimate bounds_from_curve(const DeltaCurve& lower_curve, const DeltaCurve& upper_curve);

}  // namespace dte
