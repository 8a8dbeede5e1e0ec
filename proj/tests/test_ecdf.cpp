#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dte/bounds.hpp"
#include "dte/ecdf.hpp"
#include "dte/sample.hpp"
#include "dte/transforms.hpp"

using namespace dte;

namespace {

// Direct count of arm values <= t.
double brute_delta(const std::vector<double>& v1, const std::vector<double>& v0, double t) {
  double c1 = 0, c0 = 0;
  for (double v : v1) c1 += v <= t;
  for (double v : v0) c0 += v <= t;
  return c1 / static_cast<double>(v1.size()) - c0 / static_cast<double>(v0.size());
}

Sample two_arm(const std::vector<double>& y1, const std::vector<double>& y0) {
  std::vector<double> y = y1;
  y.insert(y.end(), y0.begin(), y0.end());
  std::vector<int> d(y1.size(), 1);
  d.insert(d.end(), y0.size(), 0);
  return Sample::from_columns(y, d, {}, 0);
}

}  // namespace

TEST_CASE("curve: hand-enumerated three-point example") {
  const std::vector<double> v1{0.1, 0.9}, v0{0.5};
  const DeltaCurve c(v1, v0);
  CHECK(c.breakpoints() == std::vector<double>{0.1, 0.5, 0.9});
  CHECK(c.delta() == std::vector<double>{0.5, -0.5, 0.0});
  CHECK(c(0.0) == 0.0);
  CHECK(c(0.3) == 0.5);
  CHECK(c(0.5) == -0.5);
  CHECK(c(2.0) == 0.0);
  const Optimum hi = sup_delta(c), lo = inf_delta(c);
  CHECK(hi.t_star == 0.1);
  CHECK(hi.value == 0.5);
  CHECK(lo.t_star == 0.5);
  CHECK(lo.value == -0.5);
  CHECK(1.0 + lo.value == 0.5);
}

TEST_CASE("curve: identical arms give a zero curve and sentinel optimizers") {
  const std::vector<double> v{0.3, 1.2, 1.2, 4.0};
  const DeltaCurve c(v, v);
  for (double d : c.delta()) CHECK(d == 0.0);
  const Optimum hi = sup_delta(c), lo = inf_delta(c);
  CHECK(hi.value == 0.0);
  CHECK(hi.t_star == kMinusInf);
  CHECK(lo.value == 0.0);
  CHECK(lo.t_star == kMinusInf);
}

TEST_CASE("curve: deterministic two-point configuration bounds to [0, 0]") {
  const Sample s = two_arm({1.0}, {0.0});
  const BoundsEstimate b = makarov_bounds(s);
  CHECK(b.theta_L == 0.0);
  CHECK(b.theta_U == 0.0);
  const DeltaCurve c = build_curve(s, Adjuster::zeros(2));
  CHECK(inf_delta(c).value == -1.0);
}

TEST_CASE("curve: a poorly chosen adjuster widens point-identified bounds") {
  // Y(1) = 1, Y(0) = 0; s = 0 for half the units and 1 for the others.
  std::vector<double> y, s;
  std::vector<int> d;
  for (int i = 0; i < 8; ++i) {
    d.push_back(i % 2);
    y.push_back(i % 2 ? 1.0 : 0.0);
    s.push_back((i / 2) % 2 ? 1.0 : 0.0);
  }
  const Sample smp = Sample::from_columns(y, d, {}, 0);
  const Adjuster a{s, AdjusterLabel::user};
  const BoundsEstimate b = bounds_from_curve(build_curve(smp, a), build_curve(smp, a));
  // Y(1) - s in {0, 1}, Y(0) - s in {-1, 0}: a coupling with half the
  // differences at 0 exists, so the sharp marginal bounds are [0, 1/2].
  CHECK(b.theta_L == 0.0);
  CHECK(b.theta_U == 0.5);
  const BoundsEstimate m = makarov_bounds(smp);
  CHECK(m.theta_U == 0.0);
}

TEST_CASE("curve: zero adjuster reproduces the unadjusted bounds") {
  std::mt19937_64 g(1);
  std::normal_distribution<double> N;
  std::vector<double> y1, y0;
  for (int i = 0; i < 30; ++i) y1.push_back(N(g) + 0.5);
  for (int i = 0; i < 25; ++i) y0.push_back(N(g));
  const Sample s = two_arm(y1, y0);
  const DeltaCurve a = build_curve(s, Adjuster::zeros(s.size()));
  const DeltaCurve b(y1, y0);
  CHECK(a.delta() == b.delta());
  const BoundsEstimate m = makarov_bounds(s);
  CHECK(m.theta_L == std::max(0.0, sup_delta(b).value));
  CHECK(m.theta_U == 1.0 + inf_delta(b).value);
}

TEST_CASE("curve: scan equals a dense brute-force evaluation") {
  std::mt19937_64 g(2);
  for (int rep = 0; rep < 100; ++rep) {
    const int n1 = 1 + static_cast<int>(g() % 40), n0 = 1 + static_cast<int>(g() % 40);
    std::uniform_int_distribution<int> U(-6, 6);
    std::vector<double> v1, v0;
    for (int i = 0; i < n1; ++i) v1.push_back(U(g) * 0.5);
    for (int i = 0; i < n0; ++i) v0.push_back(U(g) * 0.5);
    const DeltaCurve c(v1, v0);
    for (std::size_t j = 0; j < c.breakpoints().size(); ++j) {
      CHECK(c.delta()[j] == brute_delta(v1, v0, c.breakpoints()[j]));
    }
    double best = 0.0, worst = 0.0;
    for (int k = 0; k <= 2000; ++k) {
      const double t = -4.0 + 8.0 * k / 2000.0;
      best = std::max(best, brute_delta(v1, v0, t));
      worst = std::min(worst, brute_delta(v1, v0, t));
    }
    // Equal fractions reached through different counts may differ in the last bit.
    CHECK(std::abs(sup_delta(c).value - best) <= 4 * std::numeric_limits<double>::epsilon());
    CHECK(std::abs(inf_delta(c).value - worst) <= 4 * std::numeric_limits<double>::epsilon());
    const Optimum o = sup_delta(c);
    if (o.value > 0.0) {
      CHECK(brute_delta(v1, v0, o.t_star) == o.value);
      for (double t : c.breakpoints()) {
        if (t < o.t_star) CHECK(brute_delta(v1, v0, t) < o.value - 1e-12);
      }
    }
  }
}

TEST_CASE("curve: range properties on random samples") {
  std::mt19937_64 g(3);
  std::exponential_distribution<double> E;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v1(1 + g() % 20), v0(1 + g() % 20);
    for (double& v : v1) v = E(g);
    for (double& v : v0) v = E(g);
    const DeltaCurve c(v1, v0);
    for (double d : c.delta()) CHECK((d >= -1.0 && d <= 1.0));
    CHECK(c.delta().back() == 0.0);
    CHECK(sup_delta(c).value >= 0.0);
    CHECK(inf_delta(c).value <= 0.0);
  }
}

TEST_CASE("curve: strictly increasing transforms leave the optimum values unchanged") {
  std::mt19937_64 g(4);
  std::normal_distribution<double> N;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> y1(25), y0(31);
    for (double& v : y1) v = N(g) + 0.3;
    for (double& v : y0) v = N(g);
    const Sample s = two_arm(y1, y0);
    const BoundsEstimate a = makarov_bounds(s);
    const BoundsEstimate b = makarov_bounds(squash_outcomes(s));
    CHECK(a.theta_L == b.theta_L);
    CHECK(a.theta_U == b.theta_U);
  }
}

TEST_CASE("curve: validity on discrete populations with any adjuster") {
  // Population with a few support points: exact theta vs exact induced bounds.
  std::mt19937_64 g(5);
  std::uniform_int_distribution<int> U(0, 4);
  for (int rep = 0; rep < 300; ++rep) {
    const int m = 2 + static_cast<int>(g() % 8);
    std::vector<double> y1(m), y0(m), s(m);
    for (int i = 0; i < m; ++i) {
      y1[i] = U(g);
      y0[i] = U(g);
      s[i] = U(g) * 0.5 - 1.0;
    }
    double theta = 0.0;
    for (int i = 0; i < m; ++i) theta += (y1[i] - y0[i] <= 0.0);
    theta /= m;
    // Both arms observe every support point once, so arm ECDFs are population CDFs.
    std::vector<double> y, adj;
    std::vector<int> d;
    for (int i = 0; i < m; ++i) {
      y.push_back(y1[i]);
      d.push_back(1);
      adj.push_back(s[i]);
      y.push_back(y0[i]);
      d.push_back(0);
      adj.push_back(s[i]);
    }
    const Sample smp = Sample::from_columns(y, d, {}, 0);
    const Adjuster a{adj, AdjusterLabel::user};
    const DeltaCurve c = build_curve(smp, a);
    CHECK(sup_delta(c).value <= theta + 1e-15);
    CHECK(1.0 + inf_delta(c).value >= theta - 1e-15);
  }
}

TEST_CASE("curve: normalized weights with equal propensity match unweighted") {
  const Sample s = two_arm({0.2, 0.7, 1.5}, {0.1, 0.9});
  const std::vector<double> p(5, 0.4);
  const DeltaCurve a = build_curve(s, Adjuster::zeros(5), WeightMode::ipw_normalized, p);
  const DeltaCurve b = build_curve(s, Adjuster::zeros(5));
  REQUIRE(a.delta().size() == b.delta().size());
  for (std::size_t j = 0; j < a.delta().size(); ++j) CHECK(a.delta()[j] == doctest::Approx(b.delta()[j]));
}

TEST_CASE("step cdf: right-continuous heights") {
  const StepCdf f = StepCdf::from_values({1, 2, 2, 3});
  CHECK(f(0.99) == 0.0);
  CHECK(f(1.0) == 0.25);
  CHECK(f(2.0) == 0.75);
  CHECK(f(10.0) == 1.0);
  const std::vector<double> v{1, 2}, w{1, 3};
  const StepCdf h = StepCdf::from_weighted(v, w, 4.0);
  CHECK(h(1.5) == 0.25);
  CHECK(h(2.0) == 1.0);
}

TEST_CASE("curve dump lists every merged breakpoint") {
  const std::vector<double> v1{0.1, 0.9}, v0{0.5};
  std::ostringstream out;
  write_curve(out, DeltaCurve(v1, v0));
  CHECK(out.str() == "t,delta\n0.1,0.5\n0.5,-0.5\n0.9,0\n");
}
