#include "dte/learners.hpp"

#include <limits>

#include "dte/bounds.hpp"
#include "dte/cross_fit.hpp"
#include "dte/errors.hpp"
#include "dte/folds.hpp"
#include "dte/rng.hpp"

namespace dte {

AdjusterFit ZeroLearner::fit_predict(const Sample&, std::span<const std::size_t>,
                                     std::span<const std::size_t> eval, std::uint64_t,
                                     Diagnostics*) const {
  AdjusterFit fit;
  fit.pair.lower = Adjuster::zeros(eval.size());
  fit.pair.upper = Adjuster::zeros(eval.size());
  fit.model_L = fit.model_U = "constant";
  return fit;
}

AdjusterFit ModelLearner::fit_predict(const Sample& sample, std::span<const std::size_t> train,
                                      std::span<const std::size_t> eval, std::uint64_t seed,
                                      Diagnostics* diag) const {
  std::vector<std::size_t> t1, t0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i : train) {
    (sample.d(i) == 1 ? t1 : t0).push_back(i);
    lo = std::min(lo, sample.y(i));
    hi = std::max(hi, sample.y(i));
  }
  if (t1.empty() || t0.empty()) {
    throw DegenerateDesignError("training data lacks treated or control units");
  }
  auto m1 = fit_arm_model(sample, t1, spec_, diag);
  auto m0 = fit_arm_model(sample, t0, spec_, diag);
  const auto grid = make_grid(grid_, lo, hi, derive_seed(seed, 0x67726964));
  AdjusterFit fit;
  fit.pair = extract_adjusters(*m1, *m0, sample, eval, grid);
  fit.model_L = fit.model_U = m1->name();
  return fit;
}

std::string SelectingLearner::name() const {
  std::string s = "select(";
  for (std::size_t j = 0; j < candidates_.size(); ++j) {
    if (j) s += ",";
    s += candidates_[j].text();
  }
  return s + ")";
}

namespace {

struct InnerScore {
  ModelSpec spec;
  double theta_L;
  double theta_U;
};

std::vector<InnerScore> inner_scores(const std::vector<ModelSpec>& candidates,
                                     const Sample& sample, std::span<const std::size_t> train,
                                     int cv_folds, std::uint64_t seed, GridSpec grid,
                                     Diagnostics* diag) {
  const Sample sub = sample.subset(train);
  const FoldPlan folds = make_folds(sub, cv_folds, derive_seed(seed, 0x696e6e6572));
  std::vector<InnerScore> out;
  for (const auto& spec : candidates) {
    try {
      auto learner = learner_for(spec, grid);
      const auto adj = crossfit_adjusters(sub, folds, *learner, derive_seed(seed, 0x63616e64), nullptr);
      const BoundsEstimate b = point_bounds(sub, adj.pair);
      out.push_back({spec, b.theta_L, b.theta_U});
    } catch (const std::exception& e) {
      if (diag) diag->warn("model selection: candidate " + spec.text() + " failed: " + e.what());
    }
  }
  return out;
}

}  // namespace

Selection select_model(const std::vector<ModelSpec>& candidates, const Sample& sample,
                       std::span<const std::size_t> train, Side side, int cv_folds,
                       std::uint64_t seed, GridSpec grid, Diagnostics* diag) {
  if (candidates.empty()) throw ConfigError("model selection needs at least one candidate");
  if (candidates.size() == 1) return {candidates.front(), {}};
  const auto scores = inner_scores(candidates, sample, train, cv_folds, seed, grid, diag);
  Selection sel;
  if (scores.empty()) {
    if (diag) diag->warn("model selection: every candidate failed; using the constant model");
    sel.spec = ModelSpec{};
    return sel;
  }
  std::size_t best = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double v = side == Side::lower ? scores[j].theta_L : scores[j].theta_U;
    sel.scores.emplace_back(scores[j].spec.text(), v);
    const double b = side == Side::lower ? scores[best].theta_L : scores[best].theta_U;
    if ((side == Side::lower && v > b) || (side == Side::upper && v < b)) best = j;
  }
  sel.spec = scores[best].spec;
  return sel;
}

AdjusterFit SelectingLearner::fit_predict(const Sample& sample, std::span<const std::size_t> train,
                                          std::span<const std::size_t> eval, std::uint64_t seed,
                                          Diagnostics* diag) const {
  ModelSpec best_L = candidates_.front(), best_U = candidates_.front();
  AdjusterFit fit;
  if (candidates_.size() > 1) {
    const auto scores = inner_scores(candidates_, sample, train, cv_folds_, seed, grid_, diag);
    if (scores.empty()) {
      if (diag) diag->warn("model selection: every candidate failed; using the constant model");
      best_L = best_U = ModelSpec{};
    } else {
      std::size_t jl = 0, ju = 0;
      for (std::size_t j = 0; j < scores.size(); ++j) {
        fit.scores_L.emplace_back(scores[j].spec.text(), scores[j].theta_L);
        fit.scores_U.emplace_back(scores[j].spec.text(), scores[j].theta_U);
        if (scores[j].theta_L > scores[jl].theta_L) jl = j;
        if (scores[j].theta_U < scores[ju].theta_U) ju = j;
      }
      best_L = scores[jl].spec;
      best_U = scores[ju].spec;
    }
  }
  const std::uint64_t fit_seed = derive_seed(seed, 0x66696e616c);
  AdjusterFit lower = learner_for(best_L, grid_)->fit_predict(sample, train, eval, fit_seed, diag);
  fit.pair.lower = std::move(lower.pair.lower);
  fit.model_L = lower.model_L;
  if (best_U.text() == best_L.text()) {
    fit.pair.upper = std::move(lower.pair.upper);
    fit.model_U = lower.model_U;
  } else {
    AdjusterFit upper = learner_for(best_U, grid_)->fit_predict(sample, train, eval, fit_seed, diag);
    fit.pair.upper = std::move(upper.pair.upper);
    fit.model_U = upper.model_U;
  }
  return fit;
}

AdjusterFit FixedAdjusterLearner::fit_predict(const Sample& sample, std::span<const std::size_t>,
                                              std::span<const std::size_t> eval, std::uint64_t,
                                              Diagnostics*) const {
  if (lower_.size() != sample.size() || upper_.size() != sample.size()) {
    throw ConfigError("fixed adjuster has " + std::to_string(lower_.size()) + " values for " +
                      std::to_string(sample.size()) + " units");
  }
  AdjusterFit fit;
  fit.pair.lower.label = fit.pair.upper.label = label_;
  for (std::size_t i : eval) {
    fit.pair.lower.values.push_back(lower_[i]);
    fit.pair.upper.values.push_back(upper_[i]);
  }
  fit.model_L = fit.model_U = to_string(label_);
  return fit;
}

std::unique_ptr<AdjusterLearner> learner_for(const ModelSpec& spec, GridSpec grid) {
  if (spec.kind == "constant") return std::make_unique<ZeroLearner>();
  return std::make_unique<ModelLearner>(spec, grid);
}

std::unique_ptr<AdjusterLearner> make_learner(const std::vector<ModelSpec>& specs, GridSpec grid,
                                              int cv_folds) {
  if (specs.empty()) throw ConfigError("model: at least one model is required");
  if (specs.size() == 1) return learner_for(specs.front(), grid);
  if (cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
  return std::make_unique<SelectingLearner>(specs, cv_folds, grid);
}

}  // namespace dte
