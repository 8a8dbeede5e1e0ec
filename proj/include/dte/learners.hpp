#pragma once

// Adjuster learners: fit on training units, evaluate lower/upper adjusters on
// evaluation units. Every estimator takes one of these, so any outside model
// can be plugged in through FixedAdjusterLearner.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dte/cond_cdf.hpp"
#include "dte/sample.hpp"

namespace dte {

struct AdjusterFit {
  AdjusterPair pair;  // values aligned with the evaluation index list
  std::string model_L;
  std::string model_U;
  // Inner cross-validated bound per candidate, when selection ran.
  std::vector<std::pair<std::string, double>> scores_L;
  std::vector<std::pair<std::string, double>> scores_U;
};

class AdjusterLearner {
 public:
  virtual ~AdjusterLearner() = default;
  virtual AdjusterFit fit_predict(const Sample& sample, std::span<const std::size_t> train,
                                  std::span<const std::size_t> eval, std::uint64_t seed,
                                  Diagnostics* diag) const = 0;
  virtual std::string name() const = 0;
};

// s = 0 for everyone: the unadjusted bounds.
class ZeroLearner : public AdjusterLearner {
 public:
  AdjusterFit fit_predict(const Sample& sample, std::span<const std::size_t> train,
                          std::span<const std::size_t> eval, std::uint64_t seed,
                          Diagnostics* diag) const override;
  std::string name() const override { return "constant"; }
};

// One conditional CDF model per arm plus grid argmax / argmin.
class ModelLearner : public AdjusterLearner {
 public:
  ModelLearner(ModelSpec spec, GridSpec grid) : spec_(std::move(spec)), grid_(grid) {}
  AdjusterFit fit_predict(const Sample& sample, std::span<const std::size_t> train,
                          std::span<const std::size_t> eval, std::uint64_t seed,
                          Diagnostics* diag) const override;
  std::string name() const override { return spec_.text(); }

 private:
  ModelSpec spec_;
  GridSpec grid_;
};

// Picks a model per side by inner cross-validation on the training units:
// the largest inner lower bound for the lower adjuster, the smallest inner
// upper bound for the upper adjuster.
class SelectingLearner : public AdjusterLearner {
 public:
  SelectingLearner(std::vector<ModelSpec> candidates, int cv_folds, GridSpec grid)
      : candidates_(std::move(candidates)), cv_folds_(cv_folds), grid_(grid) {}
  AdjusterFit fit_predict(const Sample& sample, std::span<const std::size_t> train,
                          std::span<const std::size_t> eval, std::uint64_t seed,
                          Diagnostics* diag) const override;
  std::string name() const override;

 private:
  std::vector<ModelSpec> candidates_;
  int cv_folds_;
  GridSpec grid_;
};

// Per-unit adjuster values known in advance (oracle or user supplied); the
// training units are ignored.
class FixedAdjusterLearner : public AdjusterLearner {
 public:
  FixedAdjusterLearner(std::vector<double> lower, std::vector<double> upper, AdjusterLabel label)
      : lower_(std::move(lower)), upper_(std::move(upper)), label_(label) {}
  AdjusterFit fit_predict(const Sample& sample, std::span<const std::size_t> train,
                          std::span<const std::size_t> eval, std::uint64_t seed,
                          Diagnostics* diag) const override;
  std::string name() const override { return to_string(label_); }

 private:
  std::vector<double> lower_, upper_;
  AdjusterLabel label_;
};

// The learner a model spec stands for: "constant" is the zero adjuster.
std::unique_ptr<AdjusterLearner> learner_for(const ModelSpec& spec, GridSpec grid);
// One spec gives its learner; several give a SelectingLearner.
std::unique_ptr<AdjusterLearner> make_learner(const std::vector<ModelSpec>& specs, GridSpec grid,
                                              int cv_folds);

enum class Side { lower, upper };

struct Selection {
  ModelSpec spec;
  std::vector<std::pair<std::string, double>> scores;
};

// Inner cross-validated bound for each candidate on `train` only. Failing
// candidates are dropped with a warning; if all fail the constant model wins.
Selection select_model(const std::vector<ModelSpec>& candidates, const Sample& sample,
                       std::span<const std::size_t> train, Side side, int cv_folds,
                       std::uint64_t seed, GridSpec grid, Diagnostics* diag = nullptr);

}  // namespace dte
