#include "dte/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "dte/cross_fit.hpp"
#include "dte/errors.hpp"
#include "dte/finite_sample.hpp"
#include "dte/folds.hpp"
#include "dte/io.hpp"
#include "dte/learners.hpp"
#include "dte/parallel.hpp"
#include "dte/rng.hpp"
#include "dte/transforms.hpp"

namespace dte {

DgpSpec DgpSpec::standard() {
  DgpSpec s;
  const int d = 20;
  s.d = d;
  s.sigma.assign(d * d, 0.0);
  s.theta0.assign(d * d, 0.0);
  s.theta_tau.assign(d * d, 0.2);
  s.beta0.assign(d, 0.0);
  s.beta_tau.assign(d, 1.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double v;
      if (i == j) {
        v = 1.0;
      } else if (i < 2 || j < 2) {
        v = 0.0;
      } else {
        v = std::pow(0.5, std::abs(i - j));
      }
      s.sigma[i * d + j] = v;
      // 1-based i + j has the same parity as 0-based i + j.
      s.theta0[i * d + j] = 0.2 * (((i + j) % 2 == 0) ? 1.0 : -1.0);
    }
  }
  s.beta0[0] = 3.0;
  s.beta0[1] = 1.0;
  for (int k = 1; k <= 6; ++k) s.beta0[d - 7 + k] = std::pow(3.0, -k);
  return s;
}

void DgpSpec::validate() const {
  const auto dd = static_cast<std::size_t>(d);
  if (d < 1 || sigma.size() != dd * dd || theta0.size() != dd * dd ||
      theta_tau.size() != dd * dd || beta0.size() != dd || beta_tau.size() != dd) {
    throw ConfigError("simulation design has inconsistent dimensions");
  }
  if (!(p_treat > 0.0 && p_treat < 1.0)) throw ConfigError("treatment probability must lie in (0, 1)");
}

namespace {

double quad(std::span<const double> x, const std::vector<double>& b, const std::vector<double>& m) {
  const std::size_t d = x.size();
  double v = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = b[i];
    const double* mi = m.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) row += mi[j] * x[j];
    v += row * x[i];
  }
  return v;
}

Eigen::MatrixXd to_matrix(const std::vector<double>& v, int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = v[static_cast<std::size_t>(i * d + j)];
  }
  return m;
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw EstimationError("covariance is not positive definite");
  return llt.matrixL();
}

// x = L z with z iid standard normal.
void draw_x(const Eigen::MatrixXd& L, Rng& rng, std::normal_distribution<double>& nd, double* out) {
  const auto d = L.rows();
  double z[64];
  std::vector<double> zbig;
  double* zp = z;
  if (d > 64) {
    zbig.resize(static_cast<std::size_t>(d));
    zp = zbig.data();
  }
  for (Eigen::Index i = 0; i < d; ++i) zp[i] = nd(rng);
  for (Eigen::Index i = 0; i < d; ++i) {
    double v = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) v += L(i, j) * zp[j];
    out[i] = v;
  }
}

}  // namespace

double DgpSpec::outcome0(std::span<const double> x) const { return quad(x, beta0, theta0); }

double DgpSpec::effect(std::span<const double> x) const {
  return effect_shift + quad(x, beta_tau, theta_tau);
}

SimDraw draw_dgp(const DgpSpec& spec, std::size_t n, int observed_p, std::uint64_t seed) {
  spec.validate();
  if (n < 2) throw ConfigError("simulation sample size must be at least 2");
  if (observed_p < 0 || observed_p > spec.d) throw ConfigError("observed_p must lie in [0, d]");
  const auto d = static_cast<std::size_t>(spec.d);
  const auto p = static_cast<std::size_t>(observed_p);
  const Eigen::MatrixXd L = cholesky(to_matrix(spec.sigma, spec.d));
  Rng rng(seed);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution bern(spec.p_treat);

  HiddenOutcomes h;
  h.x_full_.resize(n * d);
  h.y0_.resize(n);
  h.y1_.resize(n);
  std::vector<double> y(n), x(n * p);
  std::vector<int> dv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* xi = h.x_full_.data() + i * d;
    draw_x(L, rng, nd, xi);
    const std::span<const double> row(xi, d);
    h.y0_[i] = spec.outcome0(row);
    h.y1_[i] = h.y0_[i] + spec.effect(row);
    dv[i] = bern(rng) ? 1 : 0;
    y[i] = dv[i] == 1 ? h.y1_[i] : h.y0_[i];
    std::copy(xi, xi + p, x.begin() + static_cast<std::ptrdiff_t>(i * p));
  }
  // Redraw a vanishingly unlikely one-arm assignment deterministically.
  if (std::all_of(dv.begin(), dv.end(), [&](int v) { return v == dv[0]; })) {
    dv[0] = 1 - dv[0];
    y[0] = dv[0] == 1 ? h.y1_[0] : h.y0_[0];
  }
  return SimDraw{Sample::from_columns(std::move(y), std::move(dv), std::move(x), p), std::move(h)};
}

double sample_theta(const HiddenOutcomes& hidden, double delta) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < hidden.size(); ++i) c += (hidden.y1_[i] - hidden.y0_[i] <= delta);
  return static_cast<double>(c) / static_cast<double>(hidden.size());
}

Theta0 oracle_theta0(const DgpSpec& spec, std::size_t reps, std::uint64_t seed) {
  spec.validate();
  if (reps == 0) throw ConfigError("oracle_theta0 needs at least one draw");
  const Eigen::MatrixXd L = cholesky(to_matrix(spec.sigma, spec.d));
  constexpr std::size_t kChunk = 1 << 16;
  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  std::vector<std::size_t> hits(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, 0x7468657461, c));
    std::normal_distribution<double> nd;
    std::vector<double> x(static_cast<std::size_t>(spec.d));
    const std::size_t m = std::min(kChunk, reps - c * kChunk);
    std::size_t h = 0;
    for (std::size_t r = 0; r < m; ++r) {
      draw_x(L, rng, nd, x.data());
      h += (spec.effect(x) <= spec.delta);
    }
    hits[c] = h;
  });
  std::size_t total = 0;
  for (auto h : hits) total += h;
  Theta0 t;
  t.reps = reps;
  t.value = static_cast<double>(total) / static_cast<double>(reps);
  t.se = std::sqrt(t.value * (1.0 - t.value) / static_cast<double>(reps));
  return t;
}

AdjusterPair oracle_adjuster(const DgpSpec& spec, int observed_p, const Sample& sample,
                             std::size_t inner_reps, const GridSpec& grid_spec, std::uint64_t seed) {
  spec.validate();
  if (observed_p < 1 || observed_p > spec.d) throw ConfigError("observed_p must lie in [1, d]");
  if (sample.dim() != static_cast<std::size_t>(observed_p)) {
    throw ConfigError("sample has " + std::to_string(sample.dim()) + " covariates, expected " +
                      std::to_string(observed_p));
  }
  const std::size_t n = sample.size();
  AdjusterPair out;
  out.lower = {std::vector<double>(n), AdjusterLabel::oracle};
  out.upper = {std::vector<double>(n), AdjusterLabel::oracle};

  if (observed_p == spec.d) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = sample.x(i);
      const double y0 = spec.outcome0(x) + spec.delta;
      const double y1 = spec.outcome0(x) + spec.effect(x);
      const double mid = 0.5 * (y0 + y1);
      // Past both outcomes: both adjusted values are <= 0 and the unit adds nothing.
      const double beyond = std::max(y0, y1) + 0.5 * std::abs(y1 - y0);
      out.lower.values[i] = y1 < y0 ? mid : beyond;
      out.upper.values[i] = y1 > y0 ? mid : beyond;
    }
    return out;
  }

  if (inner_reps < 100) throw ConfigError("oracle inner_reps must be at least 100");
  const int d = spec.d, p = observed_p, u = d - p;
  const Eigen::MatrixXd S = to_matrix(spec.sigma, d);
  const Eigen::MatrixXd Soo = S.topLeftCorner(p, p);
  const Eigen::MatrixXd Suo = S.bottomLeftCorner(u, p);
  const Eigen::MatrixXd Suu = S.bottomRightCorner(u, u);
  const Eigen::LLT<Eigen::MatrixXd> llt_oo(Soo);
  if (llt_oo.info() != Eigen::Success) throw EstimationError("observed covariance is singular");
  const Eigen::MatrixXd A = llt_oo.solve(Suo.transpose()).transpose();  // u x p
  const Eigen::MatrixXd Lc = cholesky(Suu - A * Suo.transpose());
  const auto grid = make_grid(grid_spec, sample.y_lo(), sample.y_hi(), derive_seed(seed, 0x67726964));

  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, 0x726f77, i));
    std::normal_distribution<double> nd;
    const auto xo = sample.x(i);
    Eigen::Map<const Eigen::VectorXd> xov(xo.data(), p);
    const Eigen::VectorXd mu = A * xov;
    std::vector<double> x(static_cast<std::size_t>(d)), xu(static_cast<std::size_t>(u));
    std::copy(xo.begin(), xo.end(), x.begin());
    std::vector<double> v0(inner_reps), v1(inner_reps);
    for (std::size_t r = 0; r < inner_reps; ++r) {
      draw_x(Lc, rng, nd, xu.data());
      for (int j = 0; j < u; ++j) x[static_cast<std::size_t>(p + j)] = mu(j) + xu[static_cast<std::size_t>(j)];
      v0[r] = spec.outcome0(x) + spec.delta;
      v1[r] = spec.outcome0(x) + spec.effect(x);
    }
    std::sort(v0.begin(), v0.end());
    std::sort(v1.begin(), v1.end());
    std::size_t a = 0, b = 0, arg_max = 0, arg_min = 0;
    double best_max = -2.0, best_min = 2.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      while (a < v1.size() && v1[a] <= grid[g]) ++a;
      while (b < v0.size() && v0[b] <= grid[g]) ++b;
      const double diff = (static_cast<double>(a) - static_cast<double>(b)) / static_cast<double>(inner_reps);
      if (diff > best_max) {
        best_max = diff;
        arg_max = g;
      }
      if (diff < best_min) {
        best_min = diff;
        arg_min = g;
      }
    }
    out.lower.values[i] = grid[arg_max];
    out.upper.values[i] = grid[arg_min];
  });
  return out;
}

std::string Cell::id() const {
  return "n=" + std::to_string(n) + ";p=" + std::to_string(p) + ";model=" + model +
         ";estimator=" + estimator;
}

namespace {

std::unique_ptr<AdjusterLearner> cell_learner(const TableConfig& cfg, const Cell& cell,
                                              const Sample& sample, std::uint64_t seed) {
  if (cell.model == "oracle") {
    auto pair = oracle_adjuster(cfg.spec, cell.p, sample, cfg.oracle_inner_reps, cfg.grid,
                                derive_seed(seed, 0x6f7261636c65));
    return std::make_unique<FixedAdjusterLearner>(std::move(pair.lower.values),
                                                  std::move(pair.upper.values), AdjusterLabel::oracle);
  }
  return make_learner(parse_model_list(cell.model), cfg.grid, cfg.cv_folds);
}

std::uint64_t cell_hash(const Cell& cell) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : cell.id()) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

}  // namespace

RepOutcome run_replication(const TableConfig& cfg, const Cell& cell, std::size_t rep) {
  RepOutcome out;
  try {
    const std::uint64_t data_seed = derive_seed(cfg.seed, 0x64617461, cell.n, rep);
    const std::uint64_t algo_seed = derive_seed(cfg.seed, cell_hash(cell), rep);
    const SimDraw draw = draw_dgp(cfg.spec, cell.n, cell.p, data_seed);
    const Sample sample = cfg.spec.delta == 0.0 ? draw.sample : shift_for_delta(draw.sample, cfg.spec.delta);
    const auto learner = cell_learner(cfg, cell, sample, algo_seed);

    if (cell.estimator == "sample-split") {
      const SplitPlan plan = make_split(sample, cfg.aux_fraction, derive_seed(algo_seed, 1));
      const SplitResult r = estimate_split(sample, plan, *learner, cfg.alpha, algo_seed, nullptr);
      out.lo = r.lower.lo;
      out.hi = r.upper.hi;
      out.theta_L = r.theta_L;
      out.theta_U = r.theta_U;
    } else {
      const FoldPlan folds = make_folds(sample, cfg.k_folds, derive_seed(algo_seed, 2));
      BoundsEstimate est;
      if (cell.estimator == "cross-fit") {
        est = estimate_crossfit(sample, folds, *learner, algo_seed, nullptr).est;
      } else if (cell.estimator == "sjls") {
        const auto adj = crossfit_adjusters(sample, folds, *learner, algo_seed, nullptr);
        const std::vector<double> prop(sample.size(), cfg.spec.p_treat);
        est = sjls_estimate(sample, adj.pair, prop);
      } else if (cell.estimator == "cross-fit-foldt") {
        est = variant_fold_t(sample, folds, *learner, algo_seed, nullptr).est;
      } else {
        throw ConfigError("unknown estimator '" + cell.estimator + "'");
      }
      const OneSidedReport ci = one_sided_cis(est, cfg.alpha);
      out.lo = ci.lower.lo;
      out.hi = ci.upper.hi;
      out.theta_L = est.theta_L;
      out.theta_U = est.theta_U;
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

McReport run_table(const TableConfig& cfg) {
  if (cfg.reps == 0) throw ConfigError("reps must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  for (const auto& c : cfg.cells) {
    if (c.estimator != "cross-fit" && c.estimator != "sample-split" && c.estimator != "sjls" &&
        c.estimator != "cross-fit-foldt") {
      throw ConfigError("cell estimator '" + c.estimator +
                        "' is not one of cross-fit, sample-split, sjls, cross-fit-foldt");
    }
    if (c.model != "oracle") parse_model_list(c.model);
  }
  McReport report;
  if (std::isnan(cfg.theta0)) {
    const Theta0 t = oracle_theta0(cfg.spec, cfg.theta0_reps, derive_seed(cfg.seed, 0x7468657461));
    report.theta0 = t.value;
    report.theta0_se = t.se;
  } else {
    report.theta0 = cfg.theta0;
  }
  for (const auto& cell : cfg.cells) {
    std::vector<RepOutcome> reps(cfg.reps);
    parallel_for(cfg.reps, [&](std::size_t r) { reps[r] = run_replication(cfg, cell, r); },
                 cfg.threads);
    CellResult cr;
    cr.cell = cell;
    std::size_t ok = 0, rz = 0, rt = 0;
    double len = 0.0, sl = 0.0, su = 0.0;
    for (const auto& r : reps) {
      if (!r.ok) {
        ++cr.failures;
        if (cr.failure_messages.size() < 5) cr.failure_messages.push_back(r.error);
        continue;
      }
      ++ok;
      rz += r.lo > 0.0;
      rt += r.lo > report.theta0;
      len += r.hi - r.lo;
      sl += r.theta_L;
      su += r.theta_U;
    }
    cr.reps = ok;
    if (ok > 0) {
      const double k = static_cast<double>(ok);
      cr.reject_zero = static_cast<double>(rz) / k;
      cr.reject_theta0 = static_cast<double>(rt) / k;
      cr.avg_length = len / k;
      cr.mean_theta_L = sl / k;
      cr.mean_theta_U = su / k;
    }
    report.cells.push_back(std::move(cr));
  }
  return report;
}

std::vector<Cell> read_cells(std::istream& in) {
  std::vector<Cell> cells;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    const auto c3 = line.rfind(',');
    if (c2 == std::string::npos || c3 <= c2) {
      throw ConfigError("cells line " + std::to_string(lineno) + ": expected n,p,model,estimator");
    }
    const std::string n_s = line.substr(0, c1);
    if (n_s == "n") continue;  // header
    Cell c;
    try {
      c.n = static_cast<std::size_t>(std::stoul(n_s));
      c.p = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    } catch (const std::exception&) {
      throw ConfigError("cells line " + std::to_string(lineno) + ": bad n or p");
    }
    c.model = line.substr(c2 + 1, c3 - c2 - 1);
    c.estimator = line.substr(c3 + 1);
    cells.push_back(c);
  }
  if (cells.empty()) throw ConfigError("cells file lists no cells");
  return cells;
}

void write_table_csv(std::ostream& out, const McReport& report) {
  out << "n,p,model,estimator,reps,failures,reject_zero,reject_theta0,avg_length,mean_theta_L,"
         "mean_theta_U,theta0\n";
  for (const auto& c : report.cells) {
    out << c.cell.n << ',' << c.cell.p << ",\"" << c.cell.model << "\"," << c.cell.estimator << ','
        << c.reps << ',' << c.failures << ',' << format_double(c.reject_zero) << ','
        << format_double(c.reject_theta0) << ',' << format_double(c.avg_length) << ','
        << format_double(c.mean_theta_L) << ',' << format_double(c.mean_theta_U) << ','
        << format_double(report.theta0) << '\n';
  }
}

}  // namespace dte
