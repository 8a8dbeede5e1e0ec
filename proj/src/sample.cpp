#include "dte/sample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dte/errors.hpp"

namespace dte {

Sample Sample::from_columns(std::vector<double> y, std::vector<int> d,
                            std::vector<double> x, std::size_t p) {
  if (y.size() != d.size()) {
    throw std::invalid_argument("outcome and treatment lengths differ");
  }
  if (x.size() != y.size() * p) {
    throw std::invalid_argument("covariate matrix has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(y.size() * p));
  }
  Sample s;
  s.y_ = std::move(y);
  s.d_ = std::move(d);
  s.x_ = std::move(x);
  s.p_ = p;
  s.finalize();
  return s;
}

void Sample::finalize() {
  n1_ = n0_ = 0;
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (!std::isfinite(y_[i])) {
      throw std::invalid_argument("non-finite outcome at unit " + std::to_string(i));
    }
    if (d_[i] == 1) {
      ++n1_;
    } else if (d_[i] == 0) {
      ++n0_;
    } else {
      throw std::invalid_argument("treatment indicator must be 0 or 1 at unit " +
                                  std::to_string(i));
    }
  }
  if (n1_ == 0 || n0_ == 0) {
    throw DegenerateDesignError("degenerate design: " + std::to_string(n1_) +
                                " treated and " + std::to_string(n0_) +
                                " control units; both arms must be nonempty");
  }
  auto [lo, hi] = std::minmax_element(y_.begin(), y_.end());
  y_lo_ = *lo;
  y_hi_ = *hi;
}

Sample Sample::subset(std::span<const std::size_t> idx) const {
  Sample s;
  s.p_ = p_;
  s.y_.reserve(idx.size());
  s.d_.reserve(idx.size());
  s.x_.reserve(idx.size() * p_);
  for (std::size_t i : idx) {
    s.y_.push_back(y_[i]);
    s.d_.push_back(d_[i]);
    auto row = x(i);
    s.x_.insert(s.x_.end(), row.begin(), row.end());
  }
  s.squashed_ = squashed_;
  s.delta_ = delta_;
  s.finalize();
  return s;
}

Sample Sample::with_outcomes(std::vector<double> y) const {
  if (y.size() != y_.size()) {
    throw std::invalid_argument("replacement outcome vector has wrong length");
  }
  Sample s = *this;
  s.y_ = std::move(y);
  s.finalize();
  return s;
}

std::vector<std::size_t> Sample::arm_indices(int arm) const {
  std::vector<std::size_t> out;
  out.reserve(arm == 1 ? n1_ : n0_);
  for (std::size_t i = 0; i < d_.size(); ++i) {
    if (d_[i] == arm) out.push_back(i);
  }
  return out;
}

const char* to_string(AdjusterLabel label) {
  switch (label) {
    case AdjusterLabel::zero: return "zero";
    case AdjusterLabel::fitted_L: return "fitted_L";
    case AdjusterLabel::fitted_U: return "fitted_U";
    case AdjusterLabel::oracle: return "oracle";
    case AdjusterLabel::user: return "user";
  }
  return "unknown";
}

void Adjuster::validate(std::size_t n) const {
  if (values.size() != n) {
    throw std::invalid_argument("adjuster has " + std::to_string(values.size()) +
                                " values for " + std::to_string(n) + " units");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw std::invalid_argument("non-finite adjuster value at unit " + std::to_string(i));
    }
  }
}

}  // namespace dte
