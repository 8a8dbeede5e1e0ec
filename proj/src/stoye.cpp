#include "dte/stoye.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dte/errors.hpp"
#include "dte/normal.hpp"

namespace dte {

const char* to_string(HRule rule) {
  switch (rule) {
    case HRule::loglog: return "loglog";
    case HRule::log: return "log";
    case HRule::q_loglog: return "q_loglog";
  }
  return "unknown";
}

HRule parse_h_rule(const std::string& s) {
  if (s == "loglog") return HRule::loglog;
  if (s == "log") return HRule::log;
  if (s == "q_loglog") return HRule::q_loglog;
  throw ConfigError("h_rule: unknown value '" + s + "' (valid: loglog, log, q_loglog)");
}

double h_threshold(HRule rule, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double ll = std::log(std::log(std::max(nd, 3.0)));
  switch (rule) {
    case HRule::loglog: return std::sqrt(ll / nd);
    case HRule::log: return std::sqrt(std::log(nd) / nd);
    case HRule::q_loglog: return std::sqrt(2.0 * ll / nd);
  }
  return 0.0;
}

double stoye_lambda(double width, double h_n) { return width > h_n ? width : 0.0; }

namespace {

constexpr double kTrunc = 8.0;
constexpr double kTol = 1e-10;

// Integral of phi(z) Phi((c - rho z) / s) over [a, b], a < b. The integrand
// switches from ~1 to ~0 near z = c / rho, so the range is split there.
double integrate_phi_Phi(double a, double b, double c, double rho, double s) {
  a = std::max(a, -kTrunc);
  b = std::min(b, kTrunc);
  if (!(a < b)) return 0.0;
  auto f = [&](double z) { return normal_pdf(z) * normal_cdf((c - rho * z) / s); };
  auto piece = [&](double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, kTol);
  };
  if (rho != 0.0) {
    const double kink = c / rho;
    if (kink > a && kink < b) return piece(a, kink) + piece(kink, b);
  }
  return piece(a, b);
}

// P(Z1 >= -x, Z2 <= y) for corr(Z1, Z2) = rho.
double orthant(double x, double y, double rho) {
  const double s2 = 1.0 - rho * rho;
  if (s2 <= 1e-14) {
    if (rho > 0) return std::max(0.0, normal_cdf(y) - normal_cdf(-x));
    // Z2 = -Z1: need Z1 >= -x and Z1 >= -y.
    return normal_cdf(std::min(x, y));
  }
  const double s = std::sqrt(s2);
  return integrate_phi_Phi(-x, std::numeric_limits<double>::infinity(), y, rho, s);
}

}  // namespace

double stoye_coverage_lower(double cL, double cU, double rho, double aU) {
  return orthant(cL, cU + aU, rho);
}

double stoye_coverage_upper(double cL, double cU, double rho, double aL) {
  return orthant(cL + aL, cU, rho);
}

StoyeCritical stoye_critical(double sigma_L, double sigma_U, double sigma_LU, double lambda,
                             std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5) for the two-sided interval");
  if (!(sigma_L > 0.0 && sigma_U > 0.0)) throw EstimationError("standard errors must be positive");
  double rho = sigma_LU / (sigma_L * sigma_U);
  rho = std::clamp(rho, -1.0, 1.0);
  const double rn = std::sqrt(static_cast<double>(n));
  // Huge a's are numerically infinite; capping keeps the arithmetic finite.
  const double aU = std::min(rn * lambda / sigma_U, 1e6);
  const double aL = std::min(rn * lambda / sigma_L, 1e6);
  // Slack for coverages that equal the target exactly in exact arithmetic.
  const double target = 1.0 - alpha - 1e-10;
  const double zlo = z_crit(alpha), zhi = z_crit(alpha / 2.0);

  auto ok1 = [&](double cL, double cU) { return stoye_coverage_lower(cL, cU, rho, aU) >= target; };
  auto ok2 = [&](double cL, double cU) { return stoye_coverage_upper(cL, cU, rho, aL) >= target; };
  auto feasible = [&](double cL, double cU) { return ok1(cL, cU) && ok2(cL, cU); };

  // Smallest cL in [zlo, zhi] meeting both constraints for this cU, or NaN.
  auto min_cL = [&](double cU) {
    if (feasible(zlo, cU)) return zlo;
    if (!feasible(zhi, cU)) return std::numeric_limits<double>::quiet_NaN();
    double a = zlo, b = zhi;
    while (b - a > 1e-11) {
      const double m = 0.5 * (a + b);
      (feasible(m, cU) ? b : a) = m;
    }
    return b;
  };
  auto objective = [&](double cU) {
    const double cL = min_cL(cU);
    if (std::isnan(cL)) return std::numeric_limits<double>::infinity();
    return sigma_L * cL + sigma_U * cU;
  };

  // Feasible cU form an interval ending at zhi; find its left end.
  double left = zlo;
  if (!feasible(zhi, zlo)) {
    double a = zlo, b = zhi;
    while (b - a > 1e-11) {
      const double m = 0.5 * (a + b);
      (feasible(zhi, m) ? b : a) = m;
    }
    left = b;
  }

  // Coarse scan, then golden-section refinement around the best cell.
  constexpr int kScan = 40;
  double best_u = left, best_v = objective(left);
  for (int j = 1; j <= kScan; ++j) {
    const double u = left + (zhi - left) * j / kScan;
    const double v = objective(u);
    if (v < best_v) {
      best_v = v;
      best_u = u;
    }
  }
  const double step = (zhi - left) / kScan;
  double a = std::max(left, best_u - step), b = std::min(zhi, best_u + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = objective(x2);
    }
  }
  double cU = f1 <= f2 ? x1 : x2;
  if (objective(cU) > best_v) cU = best_u;
  const double cL = min_cL(cU);

  StoyeCritical out{cL, cU};
  const double r1 = stoye_coverage_lower(cL, cU, rho, aU) - target;
  const double r2 = stoye_coverage_upper(cL, cU, rho, aL) - target;
  if (std::isnan(cL) || r1 < -1e-6 || r2 < -1e-6) {
    std::ostringstream msg;
    msg << "critical value search failed: last iterate cL=" << cL << " cU=" << cU
        << ", coverage residuals " << r1 << ", " << r2;
    throw EstimationError(msg.str());
  }
  return out;
}

StoyeInterval stoye_ci(const BoundsEstimate& est, double alpha, HRule rule) {
  StoyeInterval r;
  r.rule = rule;
  r.h_n = h_threshold(rule, est.n);
  r.lambda = stoye_lambda(est.theta_U - est.theta_L, r.h_n);
  const double sL = std::sqrt(std::max(est.sigma2_L, 0.0));
  const double sU = std::sqrt(std::max(est.sigma2_U, 0.0));
  if (sL > 0.0 && sU > 0.0) {
    const auto c = stoye_critical(sL, sU, est.sigma_LU, r.lambda, est.n, alpha);
    r.c_L = c.c_L;
    r.c_U = c.c_U;
  } else {
    if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5) for the two-sided interval");
    r.degenerate = true;
    r.c_L = r.c_U = z_crit(alpha / 2.0);
  }
  const double rn = std::sqrt(static_cast<double>(est.n));
  const double lo = est.theta_L - r.c_L * sL / rn;
  const double hi = est.theta_U + r.c_U * sU / rn;
  r.empty = lo > hi;
  r.lo = clip01(lo);
  r.hi = clip01(hi);
  return r;
}

}  // namespace dte
