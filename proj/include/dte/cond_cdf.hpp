#pragma once

// Conditional outcome CDF models fitted on one treatment arm, and extraction
// of the per-unit adjusters that maximize / minimize F1(t|x) - F0(t|x).

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dte/sample.hpp"

namespace dte {

struct ModelSpec {
  // constant | knn_loc_shift | ridge_loc_shift | knn_quantile
  std::string kind = "constant";
  int k = 0;             // neighbors; 0 means ceil(sqrt(arm size))
  double lambda = -1.0;  // ridge penalty; negative means chosen by GCV

  std::string text() const;
};

// Parses "constant", "knn_loc_shift:k=15", "ridge_loc_shift:lambda=auto",
// "knn_quantile:k=25". Throws ConfigError on anything else.
ModelSpec parse_model_spec(const std::string& s);
// Comma-separated list of specs.
std::vector<ModelSpec> parse_model_list(const std::string& s);

class ConditionalCdfModel {
 public:
  virtual ~ConditionalCdfModel() = default;
  virtual double eval_cdf(double t, std::span<const double> x) const = 0;
  // out[g] = eval_cdf(grid[g], x) for an ascending grid.
  virtual void eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                             std::span<double> out) const;
  virtual std::string name() const = 0;
};

// Covariate-free ECDF.
class ConstantCdf : public ConditionalCdfModel {
 public:
  explicit ConstantCdf(std::vector<double> values);
  double eval_cdf(double t, std::span<const double> x) const override;
  void eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                     std::span<double> out) const override;
  std::string name() const override { return "constant"; }

 private:
  std::vector<double> sorted_;
};

class MeanRegressor {
 public:
  virtual ~MeanRegressor() = default;
  virtual double predict(std::span<const double> x) const = 0;
};

// F(t|x) = residual ECDF evaluated at t - mu(x).
class LocationShiftCdf : public ConditionalCdfModel {
 public:
  LocationShiftCdf(std::unique_ptr<MeanRegressor> mean, std::vector<double> residuals,
                   std::string name);
  double eval_cdf(double t, std::span<const double> x) const override;
  void eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                     std::span<double> out) const override;
  std::string name() const override { return name_; }
  double mean(std::span<const double> x) const { return mean_->predict(x); }

 private:
  std::unique_ptr<MeanRegressor> mean_;
  std::vector<double> sorted_resid_;
  std::string name_;
};

// Standardized-covariate nearest neighbours; ties in distance go to the lower index.
class KnnIndex {
 public:
  KnnIndex(const Sample& sample, std::span<const std::size_t> idx);
  // Positions (into the training index list) of the k nearest rows.
  std::vector<std::size_t> neighbors(std::span<const double> x, std::size_t k) const;
  std::size_t size() const { return n_; }
  bool degenerate() const { return active_.empty(); }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> active_;
  std::vector<double> mean_, sd_;
  std::vector<double> z_;  // n_ x active_.size(), row-major
};

// F(t|x) interpolated linearly from neighbour quantiles at tau = 0, 0.01, ..., 1.
class KnnQuantileCdf : public ConditionalCdfModel {
 public:
  KnnQuantileCdf(std::shared_ptr<const KnnIndex> index, std::vector<double> y, std::size_t k);
  double eval_cdf(double t, std::span<const double> x) const override;
  void eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                     std::span<double> out) const override;
  std::string name() const override;
  // Sorted predicted quantiles at the 101 tau levels.
  std::vector<double> quantiles(std::span<const double> x) const;

 private:
  std::shared_ptr<const KnnIndex> index_;
  std::vector<double> y_;
  std::size_t k_;
};

// Piecewise-linear CDF through (q[j], tau[j]); q nondecreasing. 0 below q[0],
// 1 above q.back(); at a value shared by a run of equal quantiles, the
// midpoint of the run's tau range.
double interpolate_quantile_cdf(std::span<const double> tau, std::span<const double> q, double t);

// Fits `spec` on the units `idx` (all from one arm). Degenerate covariates make
// the covariate models fall back to the constant model with a warning.
// Throws EstimationError if k exceeds the arm size.
std::unique_ptr<ConditionalCdfModel> fit_arm_model(const Sample& sample,
                                                   std::span<const std::size_t> idx,
                                                   const ModelSpec& spec,
                                                   Diagnostics* diag = nullptr);

struct GridSpec {
  enum class Kind { random_normal, equispaced } kind = Kind::random_normal;
  std::size_t size = 10000;
};

// random_normal: draws from N(0, (y_hi - y_lo)^2); equispaced: covers
// [y_lo - r, y_hi + r] with r = y_hi - y_lo. Sorted ascending.
std::vector<double> make_grid(const GridSpec& spec, double y_lo, double y_hi, std::uint64_t seed);

// For each evaluation unit: lower = smallest grid t maximizing m1 - m0,
// upper = smallest grid t minimizing it.
AdjusterPair extract_adjusters(const ConditionalCdfModel& m1, const ConditionalCdfModel& m0,
                               const Sample& sample, std::span<const std::size_t> eval,
                               std::span<const double> grid);

}  // namespace dte
