#include "dte/ecdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "dte/bounds.hpp"
#include "dte/errors.hpp"
#include "dte/io.hpp"

namespace dte {

StepCdf StepCdf::from_values(std::vector<double> values) {
  StepCdf c;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    c.bp_.push_back(values[i]);
    c.h_.push_back(static_cast<double>(i + 1) / n);
  }
  return c;
}

StepCdf StepCdf::from_weighted(std::span<const double> values, std::span<const double> weights,
                               double denominator) {
  if (values.size() != weights.size()) throw std::invalid_argument("weights length mismatch");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  StepCdf c;
  double acc = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    acc += weights[order[j]];
    if (j + 1 < order.size() && values[order[j + 1]] == values[order[j]]) continue;
    c.bp_.push_back(values[order[j]]);
    c.h_.push_back(acc / denominator);
  }
  return c;
}

double StepCdf::operator()(double t) const {
  auto it = std::upper_bound(bp_.begin(), bp_.end(), t);
  if (it == bp_.begin()) return 0.0;
  return h_[static_cast<std::size_t>(it - bp_.begin()) - 1];
}

DeltaCurve::DeltaCurve(std::span<const double> v1, std::span<const double> w1,
                       std::span<const double> v0, std::span<const double> w0) {
  if (v1.size() != w1.size() || v0.size() != w0.size()) {
    throw std::invalid_argument("weights length mismatch");
  }
  merge(v1, w1, v0, w0, false);
}

DeltaCurve::DeltaCurve(std::span<const double> v1, std::span<const double> v0) {
  merge(v1, {}, v0, {}, true);
}

void DeltaCurve::merge(std::span<const double> v1, std::span<const double> w1,
                       std::span<const double> v0, std::span<const double> w0, bool exact_counts) {
  if (v1.empty() || v0.empty()) {
    throw DegenerateDesignError("cannot build a CDF difference with an empty arm");
  }
  struct Event {
    double v;
    int arm;
    double w;
  };
  std::vector<Event> ev;
  ev.reserve(v1.size() + v0.size());
  for (std::size_t i = 0; i < v1.size(); ++i) ev.push_back({v1[i], 1, exact_counts ? 1.0 : w1[i]});
  for (std::size_t i = 0; i < v0.size(); ++i) ev.push_back({v0[i], 0, exact_counts ? 1.0 : w0[i]});
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.v < b.v; });

  const double n1 = static_cast<double>(v1.size());
  const double n0 = static_cast<double>(v0.size());
  std::size_t c1 = 0, c0 = 0;
  double s1 = 0.0, s0 = 0.0;
  for (std::size_t j = 0; j < ev.size(); ++j) {
    if (ev[j].arm == 1) {
      ++c1;
      s1 += ev[j].w;
    } else {
      ++c0;
      s0 += ev[j].w;
    }
    if (j + 1 < ev.size() && ev[j + 1].v == ev[j].v) continue;
    const double a = exact_counts ? static_cast<double>(c1) / n1 : s1;
    const double b = exact_counts ? static_cast<double>(c0) / n0 : s0;
    bp_.push_back(ev[j].v);
    f1_.push_back(a);
    f0_.push_back(b);
    double diff = a - b;
    // Weighted sums carry rounding; keep exact ties at zero.
    if (!exact_counts && std::abs(diff) <= 1e-12) diff = 0.0;
    delta_.push_back(diff);
  }
}

double DeltaCurve::operator()(double t) const {
  auto it = std::upper_bound(bp_.begin(), bp_.end(), t);
  if (it == bp_.begin()) return 0.0;
  return delta_[static_cast<std::size_t>(it - bp_.begin()) - 1];
}

DeltaCurve build_curve(const Sample& sample, const Adjuster& adjuster, WeightMode mode,
                       std::span<const double> propensity) {
  adjuster.validate(sample.size());
  const std::size_t n = sample.size();
  std::vector<double> v1, v0, w1, w0;
  v1.reserve(sample.n_treated());
  v0.reserve(sample.n_control());
  for (std::size_t i = 0; i < n; ++i) {
    (sample.d(i) == 1 ? v1 : v0).push_back(sample.y(i) - adjuster.values[i]);
  }
  if (mode == WeightMode::none) return DeltaCurve(v1, v0);

  if (propensity.size() != n) throw std::invalid_argument("propensity length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (sample.d(i) == 1) {
      w1.push_back(1.0 / propensity[i]);
    } else {
      w0.push_back(1.0 / (1.0 - propensity[i]));
    }
  }
  double d1, d0;
  if (mode == WeightMode::ipw_normalized) {
    d1 = std::accumulate(w1.begin(), w1.end(), 0.0);
    d0 = std::accumulate(w0.begin(), w0.end(), 0.0);
  } else {
    d1 = d0 = static_cast<double>(n);
  }
  for (double& w : w1) w /= d1;
  for (double& w : w0) w /= d0;
  return DeltaCurve(v1, w1, v0, w0);
}

DeltaCurve build_weighted_curve(const Sample& sample, const Adjuster& adjuster,
                                std::span<const double> unit_weights) {
  adjuster.validate(sample.size());
  if (unit_weights.size() != sample.size()) throw std::invalid_argument("weights length mismatch");
  std::vector<double> v1, v0, w1, w0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.d(i) == 1) {
      v1.push_back(sample.y(i) - adjuster.values[i]);
      w1.push_back(unit_weights[i]);
    } else {
      v0.push_back(sample.y(i) - adjuster.values[i]);
      w0.push_back(unit_weights[i]);
    }
  }
  return DeltaCurve(v1, w1, v0, w0);
}

namespace {

// Near-ties (within kTieTol) count as ties so that rounding in weighted sums
// cannot move the optimizer away from the smallest maximizing t.
constexpr double kTieTol = 1e-12;

}  // namespace

Optimum sup_delta(const DeltaCurve& curve) {
  Optimum best;
  const auto& d = curve.delta();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] > best.value + kTieTol) {
      best.value = d[j];
      best.t_star = curve.breakpoints()[j];
    }
  }
  return best;
}

Optimum inf_delta(const DeltaCurve& curve) {
  Optimum best;
  const auto& d = curve.delta();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] < best.value - kTieTol) {
      best.value = d[j];
      best.t_star = curve.breakpoints()[j];
    }
  }
  return best;
}

std::pair<double, double> argmax_span(const DeltaCurve& curve, double value, double tol) {
  double first = kMinusInf, end = kMinusInf;
  bool found = false;
  const auto& d = curve.delta();
  const auto& bp = curve.breakpoints();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (std::abs(d[j] - value) <= tol) {
      if (!found) first = bp[j];
      end = j + 1 < bp.size() ? bp[j + 1] : bp[j];
      found = true;
    }
  }
  return {first, end};
}

void write_curve(std::ostream& out, const DeltaCurve& curve) {
  out << "t,delta\n";
  for (std::size_t j = 0; j < curve.breakpoints().size(); ++j) {
    out << format_double(curve.breakpoints()[j]) << ',' << format_double(curve.delta()[j]) << '\n';
  }
}

BoundsEstimate bounds_from_curve(const DeltaCurve& lower_curve, const DeltaCurve& upper_curve) {
  BoundsEstimate b;
  const Optimum lo = sup_delta(lower_curve);
  const Optimum up = inf_delta(upper_curve);
  b.theta_L = lo.value;
  b.t_L = lo.t_star;
  b.theta_U = 1.0 + up.value;
  b.t_U = up.t_star;
  return b;
}

BoundsEstimate makarov_bounds(const Sample& sample) {
  const DeltaCurve c = build_curve(sample, Adjuster::zeros(sample.size()));
  BoundsEstimate b = bounds_from_curve(c, c);
  b.n = sample.size();
  b.pi_hat = static_cast<double>(sample.n_treated()) / static_cast<double>(sample.size());
  return b;
}

}  // namespace dte
