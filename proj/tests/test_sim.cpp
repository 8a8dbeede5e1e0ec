#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dte/cross_fit.hpp"
#include "dte/errors.hpp"
#include "dte/rng.hpp"
#include "dte/sim.hpp"

using namespace dte;

namespace {

double corr(const Sample& s, std::size_t a, std::size_t b) {
  const double n = static_cast<double>(s.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ma += s.x(i)[a];
    mb += s.x(i)[b];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double u = s.x(i)[a] - ma, v = s.x(i)[b] - mb;
    sab += u * v;
    saa += u * u;
    sbb += v * v;
  }
  return sab / std::sqrt(saa * sbb);
}

DgpSpec one_dim(double b0, double shift) {
  DgpSpec s;
  s.d = 1;
  s.sigma = {1.0};
  s.beta0 = {b0};
  s.theta0 = {0.0};
  s.beta_tau = {0.0};
  s.theta_tau = {0.0};
  s.effect_shift = shift;
  return s;
}

}  // namespace

TEST_CASE("design: standard dimensions and coefficients") {
  const DgpSpec s = DgpSpec::standard();
  CHECK(s.d == 20);
  CHECK(s.beta0[0] == 3.0);
  CHECK(s.beta0[1] == 1.0);
  CHECK(s.beta0[2] == 0.0);
  CHECK(s.beta0[13] == 0.0);
  CHECK(s.beta0[14] == doctest::Approx(1.0 / 3.0));
  CHECK(s.beta0[19] == doctest::Approx(1.0 / 729.0));
  CHECK(s.sigma[0 * 20 + 2] == 0.0);
  CHECK(s.sigma[2 * 20 + 3] == 0.5);
  CHECK(s.sigma[2 * 20 + 4] == 0.25);
  CHECK(s.theta0[0 * 20 + 1] == doctest::Approx(-0.2));
  CHECK(s.theta0[1 * 20 + 1] == doctest::Approx(0.2));
  CHECK(s.theta_tau[3 * 20 + 7] == doctest::Approx(0.2));
  s.validate();
}

TEST_CASE("design: block independence and treatment share") {
  const SimDraw d = draw_dgp(DgpSpec::standard(), 100000, 20, 1);
  CHECK(std::abs(corr(d.sample, 0, 2)) < 0.02);
  CHECK(std::abs(corr(d.sample, 1, 2)) < 0.02);
  CHECK(corr(d.sample, 2, 3) == doctest::Approx(0.5).epsilon(0.05));
  const SimDraw e = draw_dgp(DgpSpec::standard(), 10000, 10, 2);
  CHECK(e.sample.dim() == 10);
  CHECK(std::abs(double(e.sample.n_treated()) / 10000 - 0.5) < 0.02);
}

TEST_CASE("design: mean effect equals -1 + 0.2 * sum of covariances") {
  const DgpSpec spec = DgpSpec::standard();
  double total = 0.0;
  for (double v : spec.sigma) total += v;
  const double analytic = -1.0 + 0.2 * total;
  const SimDraw d = draw_dgp(spec, 200000, 20, 3);
  double m = 0, m2 = 0;
  for (std::size_t i = 0; i < d.sample.size(); ++i) {
    const double e = spec.effect(d.sample.x(i));
    m += e;
    m2 += e * e;
  }
  const double n = static_cast<double>(d.sample.size());
  m /= n;
  const double se = std::sqrt((m2 / n - m * m) / n);
  CHECK(std::abs(m - analytic) < 4.0 * se);
}

TEST_CASE("theta0: zero effect design gives 1 and the error shrinks with reps") {
  DgpSpec s = DgpSpec::standard();
  std::fill(s.beta_tau.begin(), s.beta_tau.end(), 0.0);
  std::fill(s.theta_tau.begin(), s.theta_tau.end(), 0.0);
  s.effect_shift = 0.0;
  CHECK(oracle_theta0(s, 1000000, 1).value == 1.0);
  const Theta0 a = oracle_theta0(DgpSpec::standard(), 1000000, 2);
  const Theta0 b = oracle_theta0(DgpSpec::standard(), 2000000, 3);
  CHECK(a.se <= 0.0005);
  CHECK(a.se / b.se == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
  CHECK(std::abs(a.value - b.value) < 4.0 * a.se);
}

TEST_CASE("theta0 matches the share in a large draw") {
  const SimDraw d = draw_dgp(DgpSpec::standard(), 400000, 20, 4);
  const Theta0 t = oracle_theta0(DgpSpec::standard(), 1000000, 5);
  CHECK(std::abs(sample_theta(d.hidden, 0.0) - t.value) < 5.0 * std::sqrt(t.value * (1 - t.value) / 400000 + t.se * t.se));
}

TEST_CASE("oracle: separated deterministic outcomes split at the midpoint") {
  // y0(x) = 5 x, y1(x) = 5 x - 3; at x = 1: y0 = 5, y1 = 2.
  const DgpSpec spec = one_dim(5.0, -3.0);
  const Sample s = Sample::from_columns({2.0, 5.0}, {1, 0}, {1.0, 1.0}, 1);
  const AdjusterPair a = oracle_adjuster(spec, 1, s, 100, {}, 1);
  CHECK(a.lower.values[0] == 3.5);
  CHECK(a.lower.values[1] == 3.5);
  // The unit then counts fully in the lower-bound curve: 2 - 3.5 <= t < 5 - 3.5.
  const DeltaCurve c = build_curve(s, a.lower);
  CHECK(sup_delta(c).value == 1.0);
  CHECK(a.lower.label == AdjusterLabel::oracle);
}

TEST_CASE("oracle: all covariates observed collapses the bounds to theta") {
  const DgpSpec spec = DgpSpec::standard();
  const SimDraw d = draw_dgp(spec, 20000, 20, 6);
  const AdjusterPair a = oracle_adjuster(spec, 20, d.sample, 100, {}, 1);
  const BoundsEstimate b = point_bounds(d.sample, a);
  const double th = sample_theta(d.hidden, 0.0);
  CHECK(b.theta_U - b.theta_L < 0.05);
  CHECK(b.theta_L <= th + 0.03);
  CHECK(b.theta_U >= th - 0.03);
}

TEST_CASE("oracle: partial covariates beat no covariates") {
  const DgpSpec spec = DgpSpec::standard();
  const SimDraw d = draw_dgp(spec, 20000, 10, 7);
  GridSpec gs;
  gs.size = 2000;
  const AdjusterPair a = oracle_adjuster(spec, 10, d.sample, 400, gs, 2);
  const BoundsEstimate o = point_bounds(d.sample, a);
  const BoundsEstimate m = makarov_bounds(d.sample);
  CHECK(o.theta_L > m.theta_L + 0.05);
  CHECK(o.theta_U < m.theta_U - 0.05);
  CHECK_THROWS_AS(oracle_adjuster(spec, 10, d.sample, 50, gs, 2), ConfigError);
}

TEST_CASE("oracle: estimation error shrinks with sample size") {
  const DgpSpec spec = DgpSpec::standard();
  const double theta = oracle_theta0(spec, 2000000, 8).value;
  const int reps = 40;
  double err[2] = {0.0, 0.0};
  for (int r = 0; r < reps; ++r) {
    int k = 0;
    for (std::size_t n : {500u, 8000u}) {
      const SimDraw d = draw_dgp(spec, n, 20, derive_seed(9, n, r));
      const AdjusterPair a = oracle_adjuster(spec, 20, d.sample, 100, {}, 1);
      err[k++] += std::abs(point_bounds(d.sample, a).theta_L - theta) / reps;
    }
  }
  // Root-n rate: a 16-fold larger sample cuts the mean error about 4-fold.
  CHECK(err[1] < 0.5 * err[0]);
}

TEST_CASE("cells: parse lists, headers, comments and comma models") {
  std::istringstream in("n,p,model,estimator\n# comment\n500,20,constant,cross-fit\n2000,10,constant,knn_loc_shift:k=5,sjls\n");
  const auto cells = read_cells(in);
  REQUIRE(cells.size() == 2);
  CHECK(cells[1].n == 2000);
  CHECK(cells[1].p == 10);
  CHECK(cells[1].model == "constant,knn_loc_shift:k=5");
  CHECK(cells[1].estimator == "sjls");
  std::istringstream bad("500,20\n");
  CHECK_THROWS_AS(read_cells(bad), ConfigError);
}

TEST_CASE("table: small runs are deterministic and rates are multiples of 1 / reps") {
  TableConfig cfg;
  cfg.reps = 10;
  cfg.theta0 = 0.34;
  cfg.grid.size = 500;
  cfg.cells = {{200, 20, "constant", "cross-fit"}, {200, 20, "oracle", "cross-fit"},
               {200, 10, "constant", "sample-split"}, {200, 5, "knn_loc_shift:k=10", "cross-fit-foldt"},
               {200, 20, "constant", "sjls"}};
  const McReport a = run_table(cfg);
  std::ostringstream x, y;
  write_table_csv(x, a);
  write_table_csv(y, run_table(cfg));
  CHECK(x.str() == y.str());
  for (const auto& c : a.cells) {
    CHECK(c.reps == 10);
    CHECK(c.failures == 0);
    for (double rate : {c.reject_zero, c.reject_theta0}) {
      CHECK(std::abs(rate * 10 - std::round(rate * 10)) < 1e-9);
    }
    CHECK(c.avg_length >= 0.0);
    CHECK(c.avg_length <= 1.1);
  }
  cfg.threads = 1;
  std::ostringstream z;
  write_table_csv(z, run_table(cfg));
  CHECK(z.str() == x.str());
}

TEST_CASE("table: matched cells see the same data") {
  TableConfig cfg;
  cfg.theta0 = 0.34;
  const RepOutcome a = run_replication(cfg, {300, 20, "constant", "cross-fit"}, 4);
  const RepOutcome b = run_replication(cfg, {300, 20, "constant", "sjls"}, 4);
  const SimDraw d = draw_dgp(cfg.spec, 300, 20, derive_seed(cfg.seed, 0x64617461, 300, 4));
  CHECK(a.theta_L == makarov_bounds(d.sample).theta_L);
  CHECK(b.ok);
}

TEST_CASE("table: failures are recorded, not fatal") {
  TableConfig cfg;
  cfg.reps = 3;
  cfg.theta0 = 0.3;
  cfg.cells = {{20, 20, "knn_loc_shift:k=50", "cross-fit"}};
  const McReport r = run_table(cfg);
  CHECK(r.cells[0].failures == 3);
  CHECK(!r.cells[0].failure_messages.empty());
  cfg.cells = {{20, 20, "constant", "bootstrap"}};
  CHECK_THROWS_AS(run_table(cfg), ConfigError);
}
