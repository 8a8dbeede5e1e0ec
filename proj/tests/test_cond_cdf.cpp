#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dte/cond_cdf.hpp"
#include "dte/errors.hpp"
#include "dte/learners.hpp"
#include "dte/sample.hpp"

using namespace dte;

namespace {

struct ZeroMean : MeanRegressor {
  double predict(std::span<const double>) const override { return 0.0; }
};

// y0 = 2 x1 + e, y1 = y0 + 1 with x2 pure noise.
Sample shifted_design(std::size_t n, double noise, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N;
  std::vector<double> y, x;
  std::vector<int> d;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = N(g), x2 = N(g);
    const int di = static_cast<int>(i % 2);
    y.push_back(2.0 * x1 + noise * N(g) + di);
    d.push_back(di);
    x.push_back(x1);
    x.push_back(x2);
  }
  return Sample::from_columns(y, d, x, 2);
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("model specs parse and print") {
  CHECK(parse_model_spec("constant").kind == "constant");
  const ModelSpec a = parse_model_spec("knn_loc_shift:k=15");
  CHECK(a.kind == "knn_loc_shift");
  CHECK(a.k == 15);
  CHECK(parse_model_spec("ridge_loc_shift:lambda=auto").lambda < 0.0);
  CHECK(parse_model_spec("ridge_loc_shift:lambda=2.5").lambda == 2.5);
  CHECK(parse_model_spec("knn_quantile:k=25").k == 25);
  CHECK(parse_model_spec(a.text()).k == 15);
  CHECK_THROWS_AS(parse_model_spec("forest"), ConfigError);
  CHECK_THROWS_AS(parse_model_spec("knn_loc_shift:k=0"), ConfigError);
  CHECK_THROWS_AS(parse_model_spec("knn_loc_shift:q=3"), ConfigError);
  CHECK(parse_model_list("constant,knn_quantile:k=5").size() == 2);
}

TEST_CASE("constant model is the arm ECDF") {
  const ConstantCdf m({1.0, 2.0, 3.0});
  const std::vector<double> x{0.4};
  CHECK(m.eval_cdf(2.0, x) == doctest::Approx(2.0 / 3.0));
  CHECK(m.eval_cdf(0.0, x) == 0.0);
  CHECK(m.eval_cdf(3.0, x) == 1.0);
}

TEST_CASE("quantile interpolation between bracketing levels") {
  const std::vector<double> tau{0.2, 0.3}, q{1.0, 2.0};
  CHECK(interpolate_quantile_cdf(tau, q, 1.5) == doctest::Approx(0.25));
  CHECK(interpolate_quantile_cdf(tau, q, 0.5) == 0.0);
  CHECK(interpolate_quantile_cdf(tau, q, 2.5) == 1.0);
}

TEST_CASE("quantile interpolation on a run of equal quantiles uses the midpoint level") {
  const std::vector<double> tau{0.0, 0.25, 0.5, 0.75, 1.0}, q{0.0, 1.0, 1.0, 1.0, 2.0};
  CHECK(interpolate_quantile_cdf(tau, q, 1.0) == doctest::Approx(0.5));
  CHECK(interpolate_quantile_cdf(tau, q, 0.5) == doctest::Approx(0.125));
  CHECK(interpolate_quantile_cdf(tau, q, 1.5) == doctest::Approx(0.875));
}

TEST_CASE("location shift with zero mean is the residual ECDF") {
  const LocationShiftCdf m(std::make_unique<ZeroMean>(), {0.5, -1.0, 2.0, 0.5}, "zero");
  const ConstantCdf raw({0.5, -1.0, 2.0, 0.5});
  const std::vector<double> x{3.0};
  for (double t : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0}) CHECK(m.eval_cdf(t, x) == raw.eval_cdf(t, x));
}

TEST_CASE("every model variant gives a monotone CDF in [0, 1]") {
  const Sample s = shifted_design(200, 0.5, 1);
  const auto treated = s.arm_indices(1);
  std::mt19937_64 g(2);
  std::normal_distribution<double> N;
  for (const char* spec : {"constant", "knn_loc_shift:k=10", "ridge_loc_shift:lambda=auto", "knn_quantile:k=20"}) {
    const auto m = fit_arm_model(s, treated, parse_model_spec(spec));
    for (int r = 0; r < 1000; ++r) {
      const std::vector<double> x{N(g), N(g)};
      double t1 = 3.0 * N(g), t2 = 3.0 * N(g);
      if (t1 > t2) std::swap(t1, t2);
      const double a = m->eval_cdf(t1, x), b = m->eval_cdf(t2, x);
      CHECK(a <= b);
      CHECK(a >= 0.0);
      CHECK(b <= 1.0);
    }
    const std::vector<double> grid{-3, -1, 0, 0.5, 2, 4};
    const std::vector<double> x{0.3, -0.2};
    std::vector<double> out(grid.size());
    m->eval_cdf_grid(grid, x, out);
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(out[j] == doctest::Approx(m->eval_cdf(grid[j], x)));
  }
}

TEST_CASE("quantile predictions are sorted") {
  const Sample s = shifted_design(300, 1.0, 3);
  const auto ctrl = s.arm_indices(0);
  auto idx = std::make_shared<KnnIndex>(s, ctrl);
  std::vector<double> y;
  for (auto i : ctrl) y.push_back(s.y(i));
  const KnnQuantileCdf m(idx, y, 25);
  const std::vector<double> x{0.1, 0.7};
  const auto q = m.quantiles(x);
  CHECK(q.size() == 101);
  CHECK(std::is_sorted(q.begin(), q.end()));
}

TEST_CASE("k larger than the arm is an estimation error") {
  const Sample s = shifted_design(20, 1.0, 4);
  CHECK_THROWS_AS(fit_arm_model(s, s.arm_indices(1), parse_model_spec("knn_loc_shift:k=50")), EstimationError);
}

TEST_CASE("constant covariates fall back to the constant model with a warning") {
  std::vector<double> y, x;
  std::vector<int> d;
  for (int i = 0; i < 20; ++i) {
    y.push_back(i);
    d.push_back(i % 2);
    x.push_back(1.0);
  }
  const Sample s = Sample::from_columns(y, d, x, 1);
  Diagnostics diag;
  const auto m = fit_arm_model(s, s.arm_indices(1), parse_model_spec("knn_loc_shift:k=3"), &diag);
  CHECK(m->name() == "constant");
  CHECK(diag.warnings.size() == 1);
}

TEST_CASE("identical models give the smallest grid point on both sides") {
  const Sample s = shifted_design(10, 1.0, 5);
  const ConstantCdf m({0.0, 1.0, 2.0});
  const std::vector<double> grid{-1.0, 0.0, 0.5, 3.0};
  const auto all = iota_n(s.size());
  const AdjusterPair p = extract_adjusters(m, m, s, all, grid);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(p.lower.values[i] == -1.0);
    CHECK(p.upper.values[i] == -1.0);
  }
}

TEST_CASE("deterministic separated outcomes pick the first grid point of the gap") {
  // F1 - F0 = 1 on [2, 5) when y1 = 2 and y0 = 5.
  const Sample s = shifted_design(6, 1.0, 6);
  const ConstantCdf m1({2.0}), m0({5.0});
  const std::vector<double> grid{0.0, 1.0, 2.5, 3.0, 4.9, 5.0, 7.0};
  const auto all = iota_n(s.size());
  const AdjusterPair p = extract_adjusters(m1, m0, s, all, grid);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(p.lower.values[i] == 2.5);
    CHECK(p.upper.values[i] == 0.0);
  }
}

TEST_CASE("grids are sorted, sized and reproducible") {
  GridSpec gs;
  gs.size = 500;
  const auto a = make_grid(gs, -1.0, 3.0, 9);
  CHECK(a.size() == 500);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(a == make_grid(gs, -1.0, 3.0, 9));
  double ss = 0.0;
  for (double v : a) ss += v * v;
  CHECK(std::sqrt(ss / 500.0) == doctest::Approx(4.0).epsilon(0.1));
  gs.kind = GridSpec::Kind::equispaced;
  const auto b = make_grid(gs, -1.0, 3.0, 9);
  CHECK(b.front() == -5.0);
  CHECK(b.back() == doctest::Approx(7.0));
  gs.size = 0;
  CHECK_THROWS_AS(make_grid(gs, 0.0, 1.0, 1), ConfigError);
}

TEST_CASE("symmetric noise with a constant shift puts both adjusters at the density crossing") {
  // Y(0) | x ~ 2 x1 + N(0, 0.25), Y(1) = Y(0) + 1: F1 - F0 is most negative at
  // 2 x1 + 0.5, where the two conditional densities cross.
  const Sample s = shifted_design(4000, 0.5, 7);
  const auto tr = s.arm_indices(1), ct = s.arm_indices(0);
  const auto m1 = fit_arm_model(s, tr, parse_model_spec("ridge_loc_shift:lambda=auto"));
  const auto m0 = fit_arm_model(s, ct, parse_model_spec("ridge_loc_shift:lambda=auto"));
  GridSpec gs;
  gs.kind = GridSpec::Kind::equispaced;
  gs.size = 4000;
  const auto grid = make_grid(gs, s.y_lo(), s.y_hi(), 1);
  std::vector<std::size_t> eval(200);
  std::iota(eval.begin(), eval.end(), 0);
  const AdjusterPair p = extract_adjusters(*m1, *m0, s, eval, grid);
  double err = 0.0;
  for (std::size_t r = 0; r < eval.size(); ++r) {
    err += std::abs(p.upper.values[r] - (2.0 * s.x(eval[r])[0] + 0.5));
  }
  CHECK(err / eval.size() < 0.1);
}

TEST_CASE("selection: single candidate is returned unchanged") {
  const Sample s = shifted_design(100, 0.5, 8);
  const auto all = iota_n(s.size());
  const Selection sel = select_model({parse_model_spec("knn_quantile:k=7")}, s, all, Side::lower, 3, 1, {});
  CHECK(sel.spec.text() == "knn_quantile:k=7");
}

TEST_CASE("selection: an informative model beats the constant model for the lower bound") {
  const Sample s = shifted_design(400, 0.3, 9);
  const auto all = iota_n(s.size());
  GridSpec gs;
  gs.size = 2000;
  const Selection sel = select_model({parse_model_spec("constant"), parse_model_spec("ridge_loc_shift:lambda=auto")},
                                     s, all, Side::lower, 3, 2, gs);
  CHECK(sel.spec.kind == "ridge_loc_shift");
  REQUIRE(sel.scores.size() == 2);
  CHECK(sel.scores[1].second > sel.scores[0].second);
}

TEST_CASE("selection: failing candidates are dropped") {
  const Sample s = shifted_design(60, 0.3, 10);
  const auto all = iota_n(s.size());
  Diagnostics diag;
  const Selection sel = select_model({parse_model_spec("knn_loc_shift:k=500"), parse_model_spec("knn_quantile:k=5")},
                                     s, all, Side::upper, 3, 3, {}, &diag);
  CHECK(sel.spec.text() == "knn_quantile:k=5");
  CHECK(!diag.warnings.empty());
  const Selection none = select_model({parse_model_spec("knn_loc_shift:k=500"), parse_model_spec("knn_quantile:k=400")},
                                      s, all, Side::upper, 3, 3, {}, &diag);
  CHECK(none.spec.kind == "constant");
}
