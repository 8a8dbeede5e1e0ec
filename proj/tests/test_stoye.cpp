#include <doctest.h>

#include <cmath>
#include <random>

#include "dte/cross_fit.hpp"
#include "dte/errors.hpp"
#include "dte/normal.hpp"
#include "dte/stoye.hpp"

using namespace dte;

namespace {

// P(Z1 >= -a, Z2 <= b) for standard normals with correlation rho, by composite
// Simpson over Z1 with the conditional Z2 probability in closed form.
double simpson_orthant(double a, double b, double rho) {
  const double lo = -a, hi = 12.0;
  if (lo >= hi) return 0.0;
  const int m = 40000;
  const double h = (hi - lo) / m, s = std::sqrt(1.0 - rho * rho);
  double acc = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double z = lo + k * h;
    const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * normal_pdf(z) * normal_cdf((b - rho * z) / s);
  }
  return acc * h / 3.0;
}

BoundsEstimate make_est(double tl, double tu, double sl, double su, double rho, std::size_t n) {
  BoundsEstimate e;
  e.theta_L = tl;
  e.theta_U = tu;
  e.sigma2_L = sl * sl;
  e.sigma2_U = su * su;
  e.sigma_LU = rho * sl * su;
  e.n = n;
  return e;
}

}  // namespace

TEST_CASE("pretest: width above the threshold is kept, below it is 0") {
  CHECK(stoye_lambda(0.3, 0.05) == 0.3);
  CHECK(stoye_lambda(0.04, 0.05) == 0.0);
}

TEST_CASE("thresholds: the three sequences") {
  const double n = 1000.0;
  CHECK(h_threshold(HRule::loglog, 1000) == doctest::Approx(std::sqrt(std::log(std::log(n)) / n)));
  CHECK(h_threshold(HRule::log, 1000) == doctest::Approx(std::sqrt(std::log(n) / n)));
  CHECK(h_threshold(HRule::q_loglog, 1000) == doctest::Approx(std::sqrt(2.0 * std::log(std::log(n)) / n)));
  CHECK(parse_h_rule("log") == HRule::log);
  CHECK_THROWS_AS(parse_h_rule("sqrt"), ConfigError);
}

TEST_CASE("coverage probabilities match an independent quadrature") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> C(0.5, 2.5), R(-0.95, 0.95), A(0.0, 3.0);
  for (int r = 0; r < 40; ++r) {
    const double cL = C(g), cU = C(g), rho = R(g), a = A(g);
    CHECK(stoye_coverage_lower(cL, cU, rho, a) == doctest::Approx(simpson_orthant(cL, cU + a, rho)).epsilon(1e-7));
    CHECK(stoye_coverage_upper(cL, cU, rho, a) == doctest::Approx(simpson_orthant(cL + a, cU, rho)).epsilon(1e-7));
  }
}

TEST_CASE("coverage probabilities in the perfectly correlated limits") {
  const double c = 1.3;
  CHECK(stoye_coverage_lower(c, c, 1.0, 0.0) == doctest::Approx(normal_cdf(c) - normal_cdf(-c)).epsilon(1e-10));
  CHECK(stoye_coverage_lower(c, c, -1.0, 0.0) == doctest::Approx(normal_cdf(c)).epsilon(1e-10));
}

TEST_CASE("critical values: long identified set decouples to z_alpha") {
  for (double alpha : {0.05, 0.1}) {
    const StoyeCritical c = stoye_critical(0.5, 0.8, 0.1, 1e3, 500, alpha);
    CHECK(std::abs(c.c_L - z_crit(alpha)) < 1e-4);
    CHECK(std::abs(c.c_U - z_crit(alpha)) < 1e-4);
  }
}

TEST_CASE("critical values: zero length and perfect correlation give z_{alpha/2}") {
  for (double alpha : {0.05, 0.1}) {
    const StoyeCritical c = stoye_critical(0.7, 0.7, 0.49, 0.0, 500, alpha);
    CHECK(std::abs(c.c_L - z_crit(alpha / 2)) < 1e-4);
    CHECK(std::abs(c.c_U - z_crit(alpha / 2)) < 1e-4);
  }
}

TEST_CASE("critical values satisfy both constraints and stay in the box") {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> S(0.1, 2.0), R(-0.99, 0.99), L(0.0, 0.2);
  const double alpha = 0.05;
  for (int r = 0; r < 20; ++r) {
    const double sl = S(g), su = S(g), rho = R(g), lam = L(g);
    const std::size_t n = 100 + g() % 2000;
    const StoyeCritical c = stoye_critical(sl, su, rho * sl * su, lam, n, alpha);
    CHECK(c.c_L >= z_crit(alpha) - 1e-6);
    CHECK(c.c_U >= z_crit(alpha) - 1e-6);
    CHECK(c.c_L <= z_crit(alpha / 2) + 1e-6);
    CHECK(c.c_U <= z_crit(alpha / 2) + 1e-6);
    const double aU = std::sqrt(double(n)) * lam / su, aL = std::sqrt(double(n)) * lam / sl;
    CHECK(stoye_coverage_lower(c.c_L, c.c_U, rho, aU) >= 1 - alpha - 1e-6);
    CHECK(stoye_coverage_upper(c.c_L, c.c_U, rho, aL) >= 1 - alpha - 1e-6);
    // No cheaper point on a coarse grid of the box satisfies both constraints.
    const double obj = sl * c.c_L + su * c.c_U;
    for (int i = 0; i <= 20; ++i) {
      for (int j = 0; j <= 20; ++j) {
        const double x = z_crit(alpha) + (z_crit(alpha / 2) - z_crit(alpha)) * i / 20.0;
        const double y = z_crit(alpha) + (z_crit(alpha / 2) - z_crit(alpha)) * j / 20.0;
        if (stoye_coverage_lower(x, y, rho, aU) >= 1 - alpha && stoye_coverage_upper(x, y, rho, aL) >= 1 - alpha) {
          CHECK(sl * x + su * y >= obj - 1e-6);
        }
      }
    }
  }
}

TEST_CASE("stoye interval nests inside the Bonferroni interval") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> U(0.0, 1.0), S(0.05, 1.5), R(-1.0, 1.0);
  for (int r = 0; r < 200; ++r) {
    double a = U(g), b = U(g);
    if (a > b) std::swap(a, b);
    const BoundsEstimate e = make_est(a, b, S(g), S(g), R(g), 50 + g() % 5000);
    const Interval bonf = bonferroni_interval(e, 0.05);
    for (HRule rule : {HRule::loglog, HRule::log, HRule::q_loglog}) {
      const StoyeInterval s = stoye_ci(e, 0.05, rule);
      CHECK(s.lo >= bonf.lo - 1e-9);
      CHECK(s.hi <= bonf.hi + 1e-9);
    }
  }
}

TEST_CASE("stoye interval: degenerate variance and crossing") {
  const StoyeInterval d = stoye_ci(make_est(0.3, 0.6, 0.0, 1.0, 0.0, 100), 0.05, HRule::loglog);
  CHECK(d.degenerate);
  CHECK(d.c_L == doctest::Approx(z_crit(0.025)));
  // Lower estimate far above the upper one with small errors: empty interval.
  const StoyeInterval e = stoye_ci(make_est(0.8, 0.2, 0.1, 0.1, 0.5, 10000), 0.05, HRule::loglog);
  CHECK(e.empty);
  CHECK(e.lambda == 0.0);
  CHECK_THROWS_AS(stoye_critical(1, 1, 0, 0, 100, 0.6), ConfigError);
}
