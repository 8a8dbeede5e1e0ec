#pragma once

// Step-function algebra for adjusted empirical CDFs and their difference.
// All CDFs are right-continuous: F(t) counts observations <= t.

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "dte/sample.hpp"

namespace dte {

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

class StepCdf {
 public:
  StepCdf() = default;
  // Unit weights; heights are count / size.
  static StepCdf from_values(std::vector<double> values);
  // Heights are cumulative weight / denominator. With denominator equal to the
  // weight total the CDF reaches exactly 1.
  static StepCdf from_weighted(std::span<const double> values, std::span<const double> weights,
                               double denominator);

  double operator()(double t) const;
  const std::vector<double>& breakpoints() const { return bp_; }
  const std::vector<double>& heights() const { return h_; }

 private:
  std::vector<double> bp_;
  std::vector<double> h_;
};

enum class WeightMode {
  none,              // plain arm ECDFs
  ipw_normalized,    // D/p and (1-D)/(1-p) weights, normalized within arm
  ipw_unnormalized,  // same weights divided by n; heights need not reach 1
};

class DeltaCurve {
 public:
  // Treated and control adjusted values with per-observation weights already
  // scaled so that F_j(t) = sum of weights of arm-j values <= t.
  DeltaCurve(std::span<const double> v1, std::span<const double> w1, std::span<const double> v0,
             std::span<const double> w0);
  // Unweighted: heights are exact count ratios.
  DeltaCurve(std::span<const double> v1, std::span<const double> v0);

  // Merged distinct breakpoints and Delta = F1 - F0 evaluated there.
  const std::vector<double>& breakpoints() const { return bp_; }
  const std::vector<double>& delta() const { return delta_; }
  const std::vector<double>& f1_heights() const { return f1_; }
  const std::vector<double>& f0_heights() const { return f0_; }

  double operator()(double t) const;

 private:
  void merge(std::span<const double> v1, std::span<const double> w1, std::span<const double> v0,
             std::span<const double> w0, bool exact_counts);

  std::vector<double> bp_, delta_, f1_, f0_;
};

// y_i - s_i split by arm, with weights according to `mode`. `propensity` is
// required for the IPW modes (one value per unit).
DeltaCurve build_curve(const Sample& sample, const Adjuster& adjuster,
                       WeightMode mode = WeightMode::none,
                       std::span<const double> propensity = {});

// y_i - s_i split by arm with caller-supplied per-unit weights, already
// scaled so that F_j(t) is the weight sum of arm-j values <= t.
DeltaCurve build_weighted_curve(const Sample& sample, const Adjuster& adjuster,
                                std::span<const double> unit_weights);

struct Optimum {
  double t_star = kMinusInf;  // -inf when the optimum 0 is reached at -infinity
  double value = 0.0;
};

// Global max / min of Delta over the real line, with Delta(+-inf) = 0.
// Ties go to the smallest t; an optimum of exactly 0 reports t = -inf.
Optimum sup_delta(const DeltaCurve& curve);
Optimum inf_delta(const DeltaCurve& curve);

// Range [first, end) of t on which Delta stays at the optimum value (within
// tol); end is the breakpoint where it leaves. Used for the flat-optimum
// diagnostic.
std::pair<double, double> argmax_span(const DeltaCurve& curve, double value, double tol = 1e-12);

// Writes "t,delta" rows at the merged breakpoints.
void write_curve(std::ostream& out, const DeltaCurve& curve);

}  // namespace dte
