#include "dte/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dte/normal.hpp"

namespace dte {

Sample shift_for_delta(const Sample& sample, double delta) {
  if (!std::isfinite(delta)) throw std::invalid_argument("delta must be finite");
  Sample s = sample;
  if (delta == 0.0) return s;
  for (std::size_t i = 0; i < s.y_.size(); ++i) {
    if (s.d_[i] == 0) s.y_[i] += delta;
  }
  s.delta_ += delta;
  s.finalize();
  return s;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Sample squash_outcomes(const Sample& sample, Diagnostics* diag) {
  Sample s = sample;
  const double med = quantile(s.y_, 0.5);
  double scale = quantile(s.y_, 0.75) - quantile(s.y_, 0.25);
  if (scale <= 0.0) scale = s.y_hi_ - s.y_lo_;
  if (scale <= 0.0) {
    if (diag) diag->warn("outcome is constant; squashed outcome set to 0.5");
    std::fill(s.y_.begin(), s.y_.end(), 0.5);
  } else {
    for (double& v : s.y_) v = normal_cdf((v - med) / scale);
  }
  s.squashed_ = true;
  s.finalize();
  return s;
}

}  // namespace dte
