#pragma once

// Cross-fitted bound estimators, their variance estimates and one-sided
// intervals, plus the propensity-weighted, group and fold-learned-t variants
// and the evaluate-at-zero comparison estimator.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dte/bounds.hpp"
#include "dte/folds.hpp"
#include "dte/learners.hpp"

namespace dte {

struct FoldFitInfo {
  int fold = 0;
  std::string model_L, model_U;
  double mean_L = 0.0, sd_L = 0.0, mean_U = 0.0, sd_U = 0.0;
};

struct CrossFitAdjusters {
  AdjusterPair pair;  // one value per unit, fitted without that unit's fold
  std::vector<FoldFitInfo> folds;
};

// Fits the learner once per fold on the other folds. A failure is rethrown
// as EstimationError naming the fold.
CrossFitAdjusters crossfit_adjusters(const Sample& sample, const FoldPlan& folds,
                                     const AdjusterLearner& learner, std::uint64_t seed,
                                     Diagnostics* diag);

// Pooled sup / inf only (no variances).
BoundsEstimate point_bounds(const Sample& sample, const AdjusterPair& adj);

struct VarianceTriple {
  double sigma2_L = 0.0;
  double sigma2_U = 0.0;
  double sigma_LU = 0.0;
};

// Arm-wise variances of 1{y - s <= t} at the plugged optimizers, combined as
// v1 / pi + v0 / (1 - pi) with pi = n1 / n. An arm whose indicators are all
// equal contributes 0 and triggers a warning.
VarianceTriple variance_hat(const Sample& sample, const AdjusterPair& adj, double t_L, double t_U,
                            Diagnostics* diag = nullptr);

struct DiagnosticOptions {
  // Warn when the optimum is attained over a span wider than this fraction of
  // the outcome range.
  double flat_fraction = 0.25;
};

// Point bounds, variance triple and optimizer diagnostics.
BoundsEstimate estimate_from_adjusters(const Sample& sample, const AdjusterPair& adj,
                                       Diagnostics* diag = nullptr,
                                       const DiagnosticOptions& opt = {});

struct CrossFitResult {
  BoundsEstimate est;
  CrossFitAdjusters adjusters;
};

CrossFitResult estimate_crossfit(const Sample& sample, const FoldPlan& folds,
                                 const AdjusterLearner& learner, std::uint64_t seed,
                                 Diagnostics* diag = nullptr, const DiagnosticOptions& opt = {});

struct OneSidedReport {
  double z = 0.0;
  Interval lower;  // [theta_L - z se_L, 1], clipped
  Interval upper;  // [0, theta_U + z se_U], clipped
  double se_L = 0.0, se_U = 0.0;
  double p_L = 0.5;  // H0: lower bound = 0
  double p_U = 0.5;  // H0: upper bound = 1
  bool degenerate_L = false, degenerate_U = false;
};

OneSidedReport one_sided_cis(const BoundsEstimate& est, double alpha);

// Bonferroni two-sided interval [theta_L - z_{a/2} se_L, theta_U + z_{a/2} se_U], clipped.
Interval bonferroni_interval(const BoundsEstimate& est, double alpha);

// Inverse-propensity weighted bounds: (1/n) sum [D/p - (1-D)/(1-p)] 1{y - s <= t}.
// theta_L / theta_U are left unclipped; variances use the per-unit terms.
BoundsEstimate estimate_ipw_from_adjusters(const Sample& sample, const AdjusterPair& adj,
                                           std::span<const double> propensity,
                                           Diagnostics* diag = nullptr);

CrossFitResult variant_known_propensity(const Sample& sample, const FoldPlan& folds,
                                        const AdjusterLearner& learner,
                                        std::span<const double> propensity, std::uint64_t seed,
                                        Diagnostics* diag = nullptr);

// Weighted IPW variance at fixed evaluation points.
VarianceTriple ipw_variance(const Sample& sample, const AdjusterPair& adj, double t_L, double t_U,
                            std::span<const double> propensity);

// The IPW-weighted CDF difference evaluated at t = 0 (no optimization over t):
// theta_L = Delta(0, s_L), theta_U = 1 + Delta(0, s_U). Both are computed from
// the same curves as estimate_ipw_from_adjusters, so its lower bound is never
// smaller than this one.
BoundsEstimate sjls_estimate(const Sample& sample, const AdjusterPair& adj,
                             std::span<const double> propensity);

// Per-unit weights (n_g / n) / n_{j,g} of the group-stratified CDF difference.
// Throws DegenerateDesignError when a group lacks treated or control units.
std::vector<double> group_unit_weights(const Sample& sample, std::span<const int> group);

// Group-stratified bounds: sum_g (n_g / n) [F1g - F0g]. Variance treats the
// within-group arm shares as fixed and adds the spread of group effects.
BoundsEstimate estimate_group_from_adjusters(const Sample& sample, const AdjusterPair& adj,
                                             std::span<const int> group,
                                             Diagnostics* diag = nullptr);

CrossFitResult variant_group_propensity(const Sample& sample, std::span<const int> group,
                                        const FoldPlan& folds, const AdjusterLearner& learner,
                                        std::uint64_t seed, Diagnostics* diag = nullptr);

struct FoldTResult {
  BoundsEstimate est;
  std::vector<double> t_L, t_U;  // per fold
  CrossFitAdjusters adjusters;
};

// Bounds from indicators 1{y - s_i <= t_{k(i)}} with fold-specific thresholds
// fixed in advance; no optimization over t.
BoundsEstimate fold_t_bounds(const Sample& sample, const AdjusterPair& adj, const FoldPlan& folds,
                             std::span<const double> t_L, std::span<const double> t_U);

// For each fold the learner is fitted on the other folds and evaluated on
// them as well as on the fold; the thresholds come from the sup / inf over the
// training units only, so each fold's threshold never sees its own data.
FoldTResult variant_fold_t(const Sample& sample, const FoldPlan& folds,
                           const AdjusterLearner& learner, std::uint64_t seed,
                           Diagnostics* diag = nullptr);

}  // namespace dte
