#include "dte/cond_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "dte/errors.hpp"
#include "dte/io.hpp"
#include "dte/parallel.hpp"
#include "dte/rng.hpp"

namespace dte {

namespace {

constexpr int kTauSteps = 100;

// ECDF of `sorted` over an ascending grid, written to out.
void sweep_ecdf(const std::vector<double>& sorted, std::span<const double> grid, double shift,
                std::span<double> out) {
  const double n = static_cast<double>(sorted.size());
  std::size_t j = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g] - shift;
    while (j < sorted.size() && sorted[j] <= t) ++j;
    out[g] = static_cast<double>(j) / n;
  }
}

double ecdf_at(const std::vector<double>& sorted, double t) {
  auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

std::size_t default_k(const ModelSpec& spec, std::size_t n) {
  std::size_t k = spec.k > 0 ? static_cast<std::size_t>(spec.k)
                             : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  if (k > n) {
    throw EstimationError(spec.text() + ": k = " + std::to_string(k) + " exceeds arm size " +
                          std::to_string(n));
  }
  return k;
}

class KnnMean : public MeanRegressor {
 public:
  KnnMean(std::shared_ptr<const KnnIndex> index, std::vector<double> y, std::size_t k)
      : index_(std::move(index)), y_(std::move(y)), k_(k) {}
  double predict(std::span<const double> x) const override {
    double s = 0.0;
    for (std::size_t j : index_->neighbors(x, k_)) s += y_[j];
    return s / static_cast<double>(k_);
  }

 private:
  std::shared_ptr<const KnnIndex> index_;
  std::vector<double> y_;
  std::size_t k_;
};

class RidgeMean : public MeanRegressor {
 public:
  RidgeMean(const Sample& sample, std::span<const std::size_t> idx, double lambda) {
    const std::size_t n = idx.size();
    const std::size_t p = sample.dim();
    mean_.assign(p, 0.0);
    sd_.assign(p, 0.0);
    for (std::size_t i : idx) {
      for (std::size_t c = 0; c < p; ++c) mean_[c] += sample.x(i)[c];
    }
    for (double& m : mean_) m /= static_cast<double>(n);
    for (std::size_t i : idx) {
      for (std::size_t c = 0; c < p; ++c) {
        const double dv = sample.x(i)[c] - mean_[c];
        sd_[c] += dv * dv;
      }
    }
    for (std::size_t c = 0; c < p; ++c) {
      sd_[c] = std::sqrt(sd_[c] / static_cast<double>(n));
      if (sd_[c] > 0.0) active_.push_back(c);
    }
    Eigen::MatrixXd X(n, active_.size());
    Eigen::VectorXd y(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = sample.x(idx[r]);
      for (std::size_t a = 0; a < active_.size(); ++a) {
        const std::size_t c = active_[a];
        X(r, a) = (row[c] - mean_[c]) / sd_[c];
      }
      y(r) = sample.y(idx[r]);
    }
    intercept_ = y.mean();
    y.array() -= intercept_;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd d = svd.singularValues();
    const Eigen::VectorXd uty = svd.matrixU().transpose() * y;
    const double yy = y.squaredNorm();
    const double proj = uty.squaredNorm();

    auto coef_for = [&](double lam) {
      Eigen::VectorXd shrink(d.size());
      for (Eigen::Index j = 0; j < d.size(); ++j) shrink(j) = d(j) / (d(j) * d(j) + lam);
      return Eigen::VectorXd(svd.matrixV() * shrink.cwiseProduct(uty));
    };

    if (lambda < 0.0) {
      // Generalized cross-validation over a log grid scaled by n.
      double best = std::numeric_limits<double>::infinity();
      lambda_ = 1.0;
      for (int j = 0; j <= 40; ++j) {
        const double lam = static_cast<double>(n) * std::pow(10.0, -4.0 + 0.2 * j);
        double rss = yy - proj;
        double df = 0.0;
        for (Eigen::Index m = 0; m < d.size(); ++m) {
          const double h = d(m) * d(m) / (d(m) * d(m) + lam);
          const double r = (1.0 - h) * uty(m);
          rss += r * r;
          df += h;
        }
        const double denom = 1.0 - df / static_cast<double>(n);
        if (denom <= 0.0) continue;
        const double gcv = rss / (static_cast<double>(n) * denom * denom);
        if (gcv < best) {
          best = gcv;
          lambda_ = lam;
        }
      }
    } else {
      lambda_ = lambda;
    }
    beta_ = coef_for(lambda_);
  }

  double predict(std::span<const double> x) const override {
    double v = intercept_;
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const std::size_t c = active_[a];
      v += beta_(static_cast<Eigen::Index>(a)) * (x[c] - mean_[c]) / sd_[c];
    }
    return v;
  }

  bool degenerate() const { return active_.empty(); }

 private:
  std::vector<double> mean_, sd_;
  std::vector<std::size_t> active_;
  double intercept_ = 0.0;
  double lambda_ = 0.0;
  Eigen::VectorXd beta_;
};

std::unique_ptr<ConditionalCdfModel> constant_model(const Sample& sample,
                                                    std::span<const std::size_t> idx) {
  std::vector<double> v;
  v.reserve(idx.size());
  for (std::size_t i : idx) v.push_back(sample.y(i));
  return std::make_unique<ConstantCdf>(std::move(v));
}

}  // namespace

std::string ModelSpec::text() const {
  if (kind == "knn_loc_shift" || kind == "knn_quantile") {
    return k > 0 ? kind + ":k=" + std::to_string(k) : kind;
  }
  if (kind == "ridge_loc_shift") {
    return lambda < 0.0 ? kind + ":lambda=auto" : kind + ":lambda=" + format_double(lambda);
  }
  return kind;
}

ModelSpec parse_model_spec(const std::string& s) {
  ModelSpec spec;
  const auto colon = s.find(':');
  spec.kind = s.substr(0, colon);
  if (spec.kind != "constant" && spec.kind != "knn_loc_shift" && spec.kind != "ridge_loc_shift" &&
      spec.kind != "knn_quantile") {
    throw ConfigError("model: unknown model '" + s +
                      "' (valid: constant, knn_loc_shift, ridge_loc_shift, knn_quantile)");
  }
  if (colon == std::string::npos) return spec;
  std::stringstream params(s.substr(colon + 1));
  std::string kv;
  while (std::getline(params, kv, ';')) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    const std::string val = eq == std::string::npos ? "" : kv.substr(eq + 1);
    try {
      if (key == "k" && spec.kind != "constant" && spec.kind != "ridge_loc_shift") {
        spec.k = std::stoi(val);
        if (spec.k < 1) throw ConfigError("k must be positive");
      } else if (key == "lambda" && spec.kind == "ridge_loc_shift") {
        spec.lambda = val == "auto" ? -1.0 : std::stod(val);
        if (val != "auto" && !(spec.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
      } else {
        throw ConfigError("unknown parameter");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("model '" + s + "': " + e.what() + " (" + kv + ")");
    } catch (const std::exception&) {
      throw ConfigError("model '" + s + "': bad value in '" + kv + "'");
    }
  }
  return spec;
}

std::vector<ModelSpec> parse_model_list(const std::string& s) {
  std::vector<ModelSpec> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(parse_model_spec(item));
  }
  if (out.empty()) throw ConfigError("model: empty model list");
  return out;
}

void ConditionalCdfModel::eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                                        std::span<double> out) const {
  for (std::size_t g = 0; g < grid.size(); ++g) out[g] = eval_cdf(grid[g], x);
}

ConstantCdf::ConstantCdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw EstimationError("constant model needs at least one observation");
  std::sort(sorted_.begin(), sorted_.end());
}

double ConstantCdf::eval_cdf(double t, std::span<const double>) const {
  return ecdf_at(sorted_, t);
}

void ConstantCdf::eval_cdf_grid(std::span<const double> grid, std::span<const double>,
                                std::span<double> out) const {
  sweep_ecdf(sorted_, grid, 0.0, out);
}

LocationShiftCdf::LocationShiftCdf(std::unique_ptr<MeanRegressor> mean,
                                   std::vector<double> residuals, std::string name)
    : mean_(std::move(mean)), sorted_resid_(std::move(residuals)), name_(std::move(name)) {
  std::sort(sorted_resid_.begin(), sorted_resid_.end());
}

double LocationShiftCdf::eval_cdf(double t, std::span<const double> x) const {
  return ecdf_at(sorted_resid_, t - mean_->predict(x));
}

void LocationShiftCdf::eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                                     std::span<double> out) const {
  sweep_ecdf(sorted_resid_, grid, mean_->predict(x), out);
}

KnnIndex::KnnIndex(const Sample& sample, std::span<const std::size_t> idx) : n_(idx.size()) {
  const std::size_t p = sample.dim();
  mean_.assign(p, 0.0);
  sd_.assign(p, 0.0);
  for (std::size_t i : idx) {
    for (std::size_t c = 0; c < p; ++c) mean_[c] += sample.x(i)[c];
  }
  for (double& m : mean_) m /= static_cast<double>(n_);
  for (std::size_t i : idx) {
    for (std::size_t c = 0; c < p; ++c) {
      const double dv = sample.x(i)[c] - mean_[c];
      sd_[c] += dv * dv;
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    sd_[c] = std::sqrt(sd_[c] / static_cast<double>(n_));
    if (sd_[c] > 0.0) active_.push_back(c);
  }
  z_.reserve(n_ * active_.size());
  for (std::size_t i : idx) {
    for (std::size_t c : active_) z_.push_back((sample.x(i)[c] - mean_[c]) / sd_[c]);
  }
}

std::vector<std::size_t> KnnIndex::neighbors(std::span<const double> x, std::size_t k) const {
  const std::size_t m = active_.size();
  std::vector<double> q(m);
  for (std::size_t a = 0; a < m; ++a) q[a] = (x[active_[a]] - mean_[active_[a]]) / sd_[active_[a]];
  std::vector<std::pair<double, std::size_t>> dist(n_);
  for (std::size_t r = 0; r < n_; ++r) {
    const double* row = z_.data() + r * m;
    double s = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      const double dv = row[a] - q[a];
      s += dv * dv;
    }
    dist[r] = {s, r};
  }
  k = std::min(k, n_);
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = dist[j].second;
  return out;
}

double interpolate_quantile_cdf(std::span<const double> tau, std::span<const double> q, double t) {
  if (t < q.front()) return 0.0;
  if (t > q.back()) return 1.0;
  const auto hi_it = std::upper_bound(q.begin(), q.end(), t);
  const std::size_t j = static_cast<std::size_t>(hi_it - q.begin()) - 1;  // q[j] <= t
  if (q[j] == t) {
    const std::size_t i0 = static_cast<std::size_t>(std::lower_bound(q.begin(), q.end(), t) - q.begin());
    return 0.5 * (tau[i0] + tau[j]);
  }
  return tau[j] + (tau[j + 1] - tau[j]) * (t - q[j]) / (q[j + 1] - q[j]);
}

KnnQuantileCdf::KnnQuantileCdf(std::shared_ptr<const KnnIndex> index, std::vector<double> y,
                               std::size_t k)
    : index_(std::move(index)), y_(std::move(y)), k_(k) {}

std::string KnnQuantileCdf::name() const { return "knn_quantile:k=" + std::to_string(k_); }

std::vector<double> KnnQuantileCdf::quantiles(std::span<const double> x) const {
  std::vector<double> nb;
  for (std::size_t j : index_->neighbors(x, k_)) nb.push_back(y_[j]);
  std::sort(nb.begin(), nb.end());
  std::vector<double> q(kTauSteps + 1);
  for (int j = 0; j <= kTauSteps; ++j) {
    const double pos = static_cast<double>(j) / kTauSteps * static_cast<double>(nb.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, nb.size() - 1);
    q[static_cast<std::size_t>(j)] = nb[lo] + (pos - static_cast<double>(lo)) * (nb[hi] - nb[lo]);
  }
  // Interpolation can break ties unevenly in floating point; keep it sorted.
  std::sort(q.begin(), q.end());
  return q;
}

namespace {
const std::vector<double>& tau_levels() {
  static const std::vector<double> tau = [] {
    std::vector<double> t(kTauSteps + 1);
    for (int j = 0; j <= kTauSteps; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j) / kTauSteps;
    return t;
  }();
  return tau;
}
}  // namespace

double KnnQuantileCdf::eval_cdf(double t, std::span<const double> x) const {
  return interpolate_quantile_cdf(tau_levels(), quantiles(x), t);
}

void KnnQuantileCdf::eval_cdf_grid(std::span<const double> grid, std::span<const double> x,
                                   std::span<double> out) const {
  const auto q = quantiles(x);
  for (std::size_t g = 0; g < grid.size(); ++g) out[g] = interpolate_quantile_cdf(tau_levels(), q, grid[g]);
}

std::unique_ptr<ConditionalCdfModel> fit_arm_model(const Sample& sample,
                                                   std::span<const std::size_t> idx,
                                                   const ModelSpec& spec, Diagnostics* diag) {
  if (idx.empty()) throw EstimationError("cannot fit a model on an empty arm");
  if (spec.kind == "constant") return constant_model(sample, idx);

  std::vector<double> y;
  y.reserve(idx.size());
  for (std::size_t i : idx) y.push_back(sample.y(i));

  auto fallback = [&] {
    if (diag) diag->warn(spec.text() + ": covariates are constant on the training data; using the constant model");
    return constant_model(sample, idx);
  };

  if (spec.kind == "ridge_loc_shift") {
    auto reg = std::make_unique<RidgeMean>(sample, idx, spec.lambda);
    if (reg->degenerate()) return fallback();
    std::vector<double> resid(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) resid[r] = y[r] - reg->predict(sample.x(idx[r]));
    return std::make_unique<LocationShiftCdf>(std::move(reg), std::move(resid), spec.text());
  }

  const std::size_t k = default_k(spec, idx.size());
  auto index = std::make_shared<const KnnIndex>(sample, idx);
  if (index->degenerate()) return fallback();
  if (spec.kind == "knn_loc_shift") {
    auto reg = std::make_unique<KnnMean>(index, y, k);
    std::vector<double> resid(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) resid[r] = y[r] - reg->predict(sample.x(idx[r]));
    return std::make_unique<LocationShiftCdf>(std::move(reg), std::move(resid),
                                              "knn_loc_shift:k=" + std::to_string(k));
  }
  return std::make_unique<KnnQuantileCdf>(index, std::move(y), k);
}

std::vector<double> make_grid(const GridSpec& spec, double y_lo, double y_hi, std::uint64_t seed) {
  if (spec.size == 0) throw ConfigError("argmax grid must be nonempty");
  double r = y_hi - y_lo;
  if (!(r > 0.0)) r = 1.0;
  std::vector<double> g(spec.size);
  if (spec.kind == GridSpec::Kind::random_normal) {
    Rng rng(seed);
    std::normal_distribution<double> nd(0.0, r);
    for (double& v : g) v = nd(rng);
    std::sort(g.begin(), g.end());
  } else if (spec.size == 1) {
    g[0] = 0.5 * (y_lo + y_hi);
  } else {
    const double a = y_lo - r, b = y_hi + r;
    for (std::size_t j = 0; j < spec.size; ++j) {
      g[j] = a + (b - a) * static_cast<double>(j) / static_cast<double>(spec.size - 1);
    }
  }
  return g;
}

AdjusterPair extract_adjusters(const ConditionalCdfModel& m1, const ConditionalCdfModel& m0,
                               const Sample& sample, std::span<const std::size_t> eval,
                               std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("argmax grid must be nonempty");
  AdjusterPair out;
  out.lower.label = AdjusterLabel::fitted_L;
  out.upper.label = AdjusterLabel::fitted_U;
  out.lower.values.resize(eval.size());
  out.upper.values.resize(eval.size());
  parallel_for(eval.size(), [&](std::size_t r) {
    const auto x = sample.x(eval[r]);
    std::vector<double> a(grid.size()), b(grid.size());
    m1.eval_cdf_grid(grid, x, a);
    m0.eval_cdf_grid(grid, x, b);
    std::size_t arg_max = 0, arg_min = 0;
    double best_max = a[0] - b[0], best_min = best_max;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      const double v = a[g] - b[g];
      if (v > best_max) {
        best_max = v;
        arg_max = g;
      }
      if (v < best_min) {
        best_min = v;
        arg_min = g;
      }
    }
    out.lower.values[r] = grid[arg_max];
    out.upper.values[r] = grid[arg_min];
  });
  return out;
}

}  // namespace dte
