#pragma once

// Simulation design with Gaussian covariates and quadratic potential
// outcomes, brute-force oracles, and the Monte Carlo table runner.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dte/cond_cdf.hpp"
#include "dte/sample.hpp"

namespace dte {

struct DgpSpec {
  int d = 20;
  std::vector<double> sigma;      // d x d covariance, row-major
  std::vector<double> beta0;      // d
  std::vector<double> theta0;     // d x d
  std::vector<double> beta_tau;   // d
  std::vector<double> theta_tau;  // d x d
  double effect_shift = -1.0;     // constant added to Y(1) - Y(0)
  double p_treat = 0.5;
  double delta = 0.0;             // target is P(Y(1) - Y(0) <= delta)

  // d = 20; X1, X2 independent of everything, the rest with correlation
  // 0.5^|i-j|; beta0 = (3, 1, 0, ..., 0, 1/3, ..., 1/729); Theta0_ij =
  // 0.2 (-1)^(i+j); beta_tau = 1; Theta_tau = 0.2.
  static DgpSpec standard();
  void validate() const;

  double outcome0(std::span<const double> x) const;
  double effect(std::span<const double> x) const;
};

struct SimDraw;

// Potential outcomes and full covariates behind a simulated sample. Only the
// oracle functions below can read them.
class HiddenOutcomes {
 public:
  std::size_t size() const { return y0_.size(); }

 private:
  friend SimDraw draw_dgp(const DgpSpec&, std::size_t, int, std::uint64_t);
  friend double sample_theta(const HiddenOutcomes&, double delta);
  std::vector<double> y0_, y1_;
  std::vector<double> x_full_;
};

struct SimDraw {
  Sample sample;  // observed y, d and the first `observed_p` covariates
  HiddenOutcomes hidden;
};

SimDraw draw_dgp(const DgpSpec& spec, std::size_t n, int observed_p, std::uint64_t seed);

// Share of units in the draw with Y(1) - Y(0) <= delta.
double sample_theta(const HiddenOutcomes& hidden, double delta);

struct Theta0 {
  double value = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
};

// Monte Carlo P(Y(1) - Y(0) <= delta) over fresh covariate draws.
Theta0 oracle_theta0(const DgpSpec& spec, std::size_t reps, std::uint64_t seed);

// Sharp adjusters computed from the design. With every covariate observed the
// outcomes are deterministic and the adjuster separates them; otherwise the
// unobserved block is drawn from its conditional Gaussian `inner_reps` times
// per row and the argmax / argmin over the grid is taken. Throws ConfigError
// if inner_reps < 100 or observed_p is outside [1, d].
AdjusterPair oracle_adjuster(const DgpSpec& spec, int observed_p, const Sample& sample,
                             std::size_t inner_reps, const GridSpec& grid, std::uint64_t seed);

struct Cell {
  std::size_t n = 500;
  int p = 20;
  std::string model = "constant";  // constant | oracle | model spec list
  std::string estimator = "cross-fit";  // cross-fit | sample-split | sjls | cross-fit-foldt
  std::string id() const;
};

struct TableConfig {
  DgpSpec spec = DgpSpec::standard();
  std::vector<Cell> cells;
  std::size_t reps = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 20240101;
  int k_folds = 5;
  int cv_folds = 5;
  double aux_fraction = 0.5;
  GridSpec grid;
  std::size_t oracle_inner_reps = 2000;
  double theta0 = std::numeric_limits<double>::quiet_NaN();  // NaN: estimate it
  std::size_t theta0_reps = 1000000;
  unsigned threads = 0;
};

struct CellResult {
  Cell cell;
  std::size_t reps = 0;
  std::size_t failures = 0;
  double reject_zero = 0.0;
  double reject_theta0 = 0.0;
  double avg_length = 0.0;
  double mean_theta_L = 0.0;
  double mean_theta_U = 0.0;
  std::vector<std::string> failure_messages;  // first few only
};

struct McReport {
  double theta0 = 0.0;
  double theta0_se = 0.0;
  std::vector<CellResult> cells;
};

struct RepOutcome {
  bool ok = false;
  double lo = 0.0;  // clipped lower one-sided endpoint
  double hi = 1.0;  // clipped upper one-sided endpoint
  double theta_L = 0.0;
  double theta_U = 1.0;
  std::string error;
};

// One replication of one cell; exposed for tests.
RepOutcome run_replication(const TableConfig& cfg, const Cell& cell, std::size_t rep);

McReport run_table(const TableConfig& cfg);

// Reads cells from "n,p,model,estimator" lines (header optional, '#'
// comments). The model field may itself contain commas (a candidate list).
std::vector<Cell> read_cells(std::istream& in);
void write_table_csv(std::ostream& out, const McReport& report);

}  // namespace dte
