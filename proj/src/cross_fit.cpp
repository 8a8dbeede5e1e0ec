#include "dte/cross_fit.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "dte/errors.hpp"
#include "dte/normal.hpp"
#include "dte/parallel.hpp"
#include "dte/rng.hpp"

namespace dte {

namespace {

inline bool below(double y, double s, double t) { return t != kMinusInf && y - s <= t; }

struct MeanSd {
  double mean = 0.0, sd = 0.0;
};

MeanSd mean_sd(std::span<const double> v) {
  MeanSd r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(v.size()));
  return r;
}

struct ArmMoments {
  double n = 0.0, zl = 0.0, zu = 0.0, zlu = 0.0;
  void add(bool l, bool u) {
    n += 1.0;
    zl += l;
    zu += u;
    zlu += (l && u);
  }
  double mean_l() const { return zl / n; }
  double mean_u() const { return zu / n; }
  double var_l() const { return mean_l() - mean_l() * mean_l(); }
  double var_u() const { return mean_u() - mean_u() * mean_u(); }
  double cov() const { return zlu / n - mean_l() * mean_u(); }
};

void warn_constant_arm(const ArmMoments& m, const char* arm, Diagnostics* diag) {
  if (!diag) return;
  if (m.zl == 0.0 || m.zl == m.n) {
    diag->warn(std::string("zero variance: every ") + arm +
               " indicator at the lower-bound optimizer is equal; its variance contribution is 0");
  }
  if (m.zu == 0.0 || m.zu == m.n) {
    diag->warn(std::string("zero variance: every ") + arm +
               " indicator at the upper-bound optimizer is equal; its variance contribution is 0");
  }
}

VarianceTriple combine(const ArmMoments& m1, const ArmMoments& m0, Diagnostics* diag) {
  warn_constant_arm(m1, "treated", diag);
  warn_constant_arm(m0, "control", diag);
  const double pi = m1.n / (m1.n + m0.n);
  VarianceTriple v;
  v.sigma2_L = m1.var_l() / pi + m0.var_l() / (1.0 - pi);
  v.sigma2_U = m1.var_u() / pi + m0.var_u() / (1.0 - pi);
  v.sigma_LU = m1.cov() / pi + m0.cov() / (1.0 - pi);
  return v;
}

void flat_optimum_check(const DeltaCurve& curve, double value, const Sample& sample,
                        const DiagnosticOptions& opt, const char* side, Diagnostics* diag) {
  if (!diag || value == 0.0) return;
  const auto [first, last] = argmax_span(curve, value);
  const double range = sample.y_hi() - sample.y_lo();
  if (range > 0.0 && last - first > opt.flat_fraction * range) {
    std::ostringstream msg;
    msg << "uniqueness of optimizers: the " << side << "-bound optimum is attained on [" << first
        << ", " << last << "], wider than " << opt.flat_fraction
        << " of the outcome range; intervals may be unreliable";
    diag->warn(msg.str());
  }
}

void finish(BoundsEstimate& b, const Sample& sample) {
  b.n = sample.size();
  b.pi_hat = static_cast<double>(sample.n_treated()) / static_cast<double>(sample.size());
}

}  // namespace

CrossFitAdjusters crossfit_adjusters(const Sample& sample, const FoldPlan& folds,
                                     const AdjusterLearner& learner, std::uint64_t seed,
                                     Diagnostics* diag) {
  if (folds.fold_of.size() != sample.size()) throw ConfigError("fold plan does not match sample");
  const int K = folds.k_folds;
  CrossFitAdjusters out;
  out.pair.lower.values.assign(sample.size(), 0.0);
  out.pair.upper.values.assign(sample.size(), 0.0);
  out.folds.resize(static_cast<std::size_t>(K));
  std::vector<Diagnostics> fold_diag(static_cast<std::size_t>(K));
  std::vector<AdjusterLabel> labels(static_cast<std::size_t>(K) * 2);

  parallel_for(static_cast<std::size_t>(K), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const auto eval = folds.in_fold(k);
    const auto train = folds.out_of_fold(k);
    AdjusterFit fit;
    try {
      fit = learner.fit_predict(sample, train, eval, derive_seed(seed, 0x666f6c64, kk),
                                &fold_diag[kk]);
      fit.pair.lower.validate(eval.size());
      fit.pair.upper.validate(eval.size());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw EstimationError("fold " + std::to_string(k + 1) + ": " + e.what());
    }
    for (std::size_t r = 0; r < eval.size(); ++r) {
      out.pair.lower.values[eval[r]] = fit.pair.lower.values[r];
      out.pair.upper.values[eval[r]] = fit.pair.upper.values[r];
    }
    labels[2 * kk] = fit.pair.lower.label;
    labels[2 * kk + 1] = fit.pair.upper.label;
    auto& info = out.folds[kk];
    info.fold = k + 1;
    info.model_L = fit.model_L;
    info.model_U = fit.model_U;
    const auto ml = mean_sd(fit.pair.lower.values);
    const auto mu = mean_sd(fit.pair.upper.values);
    info.mean_L = ml.mean;
    info.sd_L = ml.sd;
    info.mean_U = mu.mean;
    info.sd_U = mu.sd;
  });
  out.pair.lower.label = labels[0];
  out.pair.upper.label = labels[1];
  if (diag) {
    for (auto& fd : fold_diag) {
      for (auto& w : fd.warnings) diag->warn(std::move(w));
    }
  }
  return out;
}

BoundsEstimate point_bounds(const Sample& sample, const AdjusterPair& adj) {
  const DeltaCurve cl = build_curve(sample, adj.lower);
  const DeltaCurve cu = build_curve(sample, adj.upper);
  BoundsEstimate b = bounds_from_curve(cl, cu);
  finish(b, sample);
  return b;
}

VarianceTriple variance_hat(const Sample& sample, const AdjusterPair& adj, double t_L, double t_U,
                            Diagnostics* diag) {
  adj.lower.validate(sample.size());
  adj.upper.validate(sample.size());
  ArmMoments m1, m0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const bool l = below(sample.y(i), adj.lower.values[i], t_L);
    const bool u = below(sample.y(i), adj.upper.values[i], t_U);
    (sample.d(i) == 1 ? m1 : m0).add(l, u);
  }
  return combine(m1, m0, diag);
}

BoundsEstimate estimate_from_adjusters(const Sample& sample, const AdjusterPair& adj,
                                       Diagnostics* diag, const DiagnosticOptions& opt) {
  const DeltaCurve cl = build_curve(sample, adj.lower);
  const DeltaCurve cu = build_curve(sample, adj.upper);
  BoundsEstimate b = bounds_from_curve(cl, cu);
  finish(b, sample);
  const VarianceTriple v = variance_hat(sample, adj, b.t_L, b.t_U, diag);
  b.sigma2_L = v.sigma2_L;
  b.sigma2_U = v.sigma2_U;
  b.sigma_LU = v.sigma_LU;
  flat_optimum_check(cl, b.theta_L, sample, opt, "lower", diag);
  flat_optimum_check(cu, b.theta_U - 1.0, sample, opt, "upper", diag);
  return b;
}

CrossFitResult estimate_crossfit(const Sample& sample, const FoldPlan& folds,
                                 const AdjusterLearner& learner, std::uint64_t seed,
                                 Diagnostics* diag, const DiagnosticOptions& opt) {
  CrossFitResult r;
  r.adjusters = crossfit_adjusters(sample, folds, learner, seed, diag);
  r.est = estimate_from_adjusters(sample, r.adjusters.pair, diag, opt);
  return r;
}

OneSidedReport one_sided_cis(const BoundsEstimate& est, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  OneSidedReport r;
  const double rn = std::sqrt(static_cast<double>(est.n));
  r.z = z_crit(alpha);
  r.se_L = std::sqrt(std::max(est.sigma2_L, 0.0)) / rn;
  r.se_U = std::sqrt(std::max(est.sigma2_U, 0.0)) / rn;
  r.lower = {clip01(est.theta_L - r.z * r.se_L), 1.0};
  r.upper = {0.0, clip01(est.theta_U + r.z * r.se_U)};

  // Lower: H0 theta_L = 0 against theta_L > 0. Upper: H0 theta_U = 1 against theta_U < 1.
  if (est.theta_L == 0.0) {
    r.p_L = 0.5;
  } else if (r.se_L > 0.0) {
    r.p_L = 1.0 - normal_cdf(est.theta_L / r.se_L);
  } else {
    r.degenerate_L = true;
    r.p_L = est.theta_L > 0.0 ? 0.0 : 1.0;
  }
  const double gap = est.theta_U - 1.0;
  if (gap == 0.0) {
    r.p_U = 0.5;
  } else if (r.se_U > 0.0) {
    r.p_U = normal_cdf(gap / r.se_U);
  } else {
    r.degenerate_U = true;
    r.p_U = gap < 0.0 ? 0.0 : 1.0;
  }
  return r;
}

Interval bonferroni_interval(const BoundsEstimate& est, double alpha) {
  const double rn = std::sqrt(static_cast<double>(est.n));
  const double z = z_crit(alpha / 2.0);
  return {clip01(est.theta_L - z * std::sqrt(std::max(est.sigma2_L, 0.0)) / rn),
          clip01(est.theta_U + z * std::sqrt(std::max(est.sigma2_U, 0.0)) / rn)};
}

VarianceTriple ipw_variance(const Sample& sample, const AdjusterPair& adj, double t_L, double t_U,
                            std::span<const double> propensity) {
  const double n = static_cast<double>(sample.size());
  double ml = 0.0, mu = 0.0, sl = 0.0, su = 0.0, slu = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double w = sample.d(i) == 1 ? 1.0 / propensity[i] : -1.0 / (1.0 - propensity[i]);
    const double pl = below(sample.y(i), adj.lower.values[i], t_L) ? w : 0.0;
    const double pu = below(sample.y(i), adj.upper.values[i], t_U) ? w : 0.0;
    ml += pl;
    mu += pu;
    sl += pl * pl;
    su += pu * pu;
    slu += pl * pu;
  }
  ml /= n;
  mu /= n;
  return {sl / n - ml * ml, su / n - mu * mu, slu / n - ml * mu};
}

BoundsEstimate estimate_ipw_from_adjusters(const Sample& sample, const AdjusterPair& adj,
                                           std::span<const double> propensity, Diagnostics* diag) {
  const DeltaCurve cl = build_curve(sample, adj.lower, WeightMode::ipw_unnormalized, propensity);
  const DeltaCurve cu = build_curve(sample, adj.upper, WeightMode::ipw_unnormalized, propensity);
  BoundsEstimate b = bounds_from_curve(cl, cu);
  finish(b, sample);
  const VarianceTriple v = ipw_variance(sample, adj, b.t_L, b.t_U, propensity);
  b.sigma2_L = v.sigma2_L;
  b.sigma2_U = v.sigma2_U;
  b.sigma_LU = v.sigma_LU;
  if (diag && (b.theta_L > 1.0 || b.theta_U < 0.0)) {
    diag->warn("propensity-weighted bound estimate lies outside [0, 1]");
  }
  return b;
}

CrossFitResult variant_known_propensity(const Sample& sample, const FoldPlan& folds,
                                        const AdjusterLearner& learner,
                                        std::span<const double> propensity, std::uint64_t seed,
                                        Diagnostics* diag) {
  if (propensity.size() != sample.size()) throw ConfigError("propensity length mismatch");
  CrossFitResult r;
  r.adjusters = crossfit_adjusters(sample, folds, learner, seed, diag);
  r.est = estimate_ipw_from_adjusters(sample, r.adjusters.pair, propensity, diag);
  return r;
}

BoundsEstimate sjls_estimate(const Sample& sample, const AdjusterPair& adj,
                             std::span<const double> propensity) {
  if (propensity.size() != sample.size()) throw ConfigError("propensity length mismatch");
  const DeltaCurve cl = build_curve(sample, adj.lower, WeightMode::ipw_unnormalized, propensity);
  const DeltaCurve cu = build_curve(sample, adj.upper, WeightMode::ipw_unnormalized, propensity);
  BoundsEstimate b;
  b.theta_L = cl(0.0);
  b.theta_U = 1.0 + cu(0.0);
  b.t_L = b.t_U = 0.0;
  finish(b, sample);
  const VarianceTriple v = ipw_variance(sample, adj, 0.0, 0.0, propensity);
  b.sigma2_L = v.sigma2_L;
  b.sigma2_U = v.sigma2_U;
  b.sigma_LU = v.sigma_LU;
  return b;
}

std::vector<double> group_unit_weights(const Sample& sample, std::span<const int> group) {
  const std::size_t n = sample.size();
  if (group.size() != n) throw ConfigError("group column length mismatch");
  std::map<int, std::pair<double, double>> counts;
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = counts[group[i]];
    (sample.d(i) == 1 ? c.first : c.second) += 1.0;
  }
  for (const auto& [g, c] : counts) {
    if (c.first == 0.0 || c.second == 0.0) {
      throw DegenerateDesignError("group " + std::to_string(g) + " lacks treated or control units");
    }
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = counts[group[i]];
    const double share = (c.first + c.second) / static_cast<double>(n);
    w[i] = share / (sample.d(i) == 1 ? c.first : c.second);
  }
  return w;
}

BoundsEstimate estimate_group_from_adjusters(const Sample& sample, const AdjusterPair& adj,
                                             std::span<const int> group, Diagnostics* diag) {
  const std::size_t n = sample.size();
  const double nd = static_cast<double>(n);
  const auto w = group_unit_weights(sample, group);
  const DeltaCurve cl = build_weighted_curve(sample, adj.lower, w);
  const DeltaCurve cu = build_weighted_curve(sample, adj.upper, w);
  BoundsEstimate b = bounds_from_curve(cl, cu);
  finish(b, sample);

  std::map<int, std::pair<ArmMoments, ArmMoments>> mom;
  for (std::size_t i = 0; i < n; ++i) {
    const bool l = below(sample.y(i), adj.lower.values[i], b.t_L);
    const bool u = below(sample.y(i), adj.upper.values[i], b.t_U);
    auto& m = mom[group[i]];
    (sample.d(i) == 1 ? m.first : m.second).add(l, u);
  }
  double within_l = 0.0, within_u = 0.0, within_lu = 0.0;
  double bar_l = 0.0, bar_u = 0.0;
  for (const auto& [g, m] : mom) {
    const double ng = m.first.n + m.second.n;
    const double share = ng / nd;
    const double p1 = m.first.n / ng, p0 = m.second.n / ng;
    within_l += share * (m.first.var_l() / p1 + m.second.var_l() / p0);
    within_u += share * (m.first.var_u() / p1 + m.second.var_u() / p0);
    within_lu += share * (m.first.cov() / p1 + m.second.cov() / p0);
    bar_l += share * (m.first.mean_l() - m.second.mean_l());
    bar_u += share * (m.first.mean_u() - m.second.mean_u());
  }
  double between_l = 0.0, between_u = 0.0, between_lu = 0.0;
  for (const auto& [g, m] : mom) {
    const double share = (m.first.n + m.second.n) / nd;
    const double el = m.first.mean_l() - m.second.mean_l() - bar_l;
    const double eu = m.first.mean_u() - m.second.mean_u() - bar_u;
    between_l += share * el * el;
    between_u += share * eu * eu;
    between_lu += share * el * eu;
  }
  b.sigma2_L = within_l + between_l;
  b.sigma2_U = within_u + between_u;
  b.sigma_LU = within_lu + between_lu;
  if (diag && (b.sigma2_L == 0.0 || b.sigma2_U == 0.0)) {
    diag->warn("zero variance: group-stratified indicators are constant at an optimizer");
  }
  return b;
}

CrossFitResult variant_group_propensity(const Sample& sample, std::span<const int> group,
                                        const FoldPlan& folds, const AdjusterLearner& learner,
                                        std::uint64_t seed, Diagnostics* diag) {
  CrossFitResult r;
  r.adjusters = crossfit_adjusters(sample, folds, learner, seed, diag);
  r.est = estimate_group_from_adjusters(sample, r.adjusters.pair, group, diag);
  return r;
}

BoundsEstimate fold_t_bounds(const Sample& sample, const AdjusterPair& adj, const FoldPlan& folds,
                             std::span<const double> t_L, std::span<const double> t_U) {
  adj.lower.validate(sample.size());
  adj.upper.validate(sample.size());
  ArmMoments m1, m0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto k = static_cast<std::size_t>(folds.fold_of[i]);
    const bool l = below(sample.y(i), adj.lower.values[i], t_L[k]);
    const bool u = below(sample.y(i), adj.upper.values[i], t_U[k]);
    (sample.d(i) == 1 ? m1 : m0).add(l, u);
  }
  BoundsEstimate b;
  b.theta_L = m1.mean_l() - m0.mean_l();
  b.theta_U = 1.0 + m1.mean_u() - m0.mean_u();
  // Thresholds differ by fold; see FoldTResult.
  b.t_L = b.t_U = std::numeric_limits<double>::quiet_NaN();
  finish(b, sample);
  const VarianceTriple v = combine(m1, m0, nullptr);
  b.sigma2_L = v.sigma2_L;
  b.sigma2_U = v.sigma2_U;
  b.sigma_LU = v.sigma_LU;
  return b;
}

FoldTResult variant_fold_t(const Sample& sample, const FoldPlan& folds,
                           const AdjusterLearner& learner, std::uint64_t seed, Diagnostics* diag) {
  const auto K = static_cast<std::size_t>(folds.k_folds);
  FoldTResult r;
  r.t_L.resize(K);
  r.t_U.resize(K);
  r.adjusters.pair.lower.values.assign(sample.size(), 0.0);
  r.adjusters.pair.upper.values.assign(sample.size(), 0.0);
  r.adjusters.folds.resize(K);
  std::vector<std::size_t> all(sample.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto train = folds.out_of_fold(static_cast<int>(k));
    AdjusterFit fit;
    try {
      fit = learner.fit_predict(sample, train, all, derive_seed(seed, 0x666f6c64, k), diag);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw EstimationError("fold " + std::to_string(k + 1) + ": " + e.what());
    }
    const Sample tr = sample.subset(train);
    Adjuster al{{}, fit.pair.lower.label}, au{{}, fit.pair.upper.label};
    for (std::size_t i : train) {
      al.values.push_back(fit.pair.lower.values[i]);
      au.values.push_back(fit.pair.upper.values[i]);
    }
    r.t_L[k] = sup_delta(build_curve(tr, al)).t_star;
    r.t_U[k] = inf_delta(build_curve(tr, au)).t_star;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (static_cast<std::size_t>(folds.fold_of[i]) == k) {
        r.adjusters.pair.lower.values[i] = fit.pair.lower.values[i];
        r.adjusters.pair.upper.values[i] = fit.pair.upper.values[i];
      }
    }
    r.adjusters.pair.lower.label = fit.pair.lower.label;
    r.adjusters.pair.upper.label = fit.pair.upper.label;
    r.adjusters.folds[k].fold = static_cast<int>(k + 1);
    r.adjusters.folds[k].model_L = fit.model_L;
    r.adjusters.folds[k].model_U = fit.model_U;
  }
  r.est = fold_t_bounds(sample, r.adjusters.pair, folds, r.t_L, r.t_U);
  return r;
}

}  // namespace dte
