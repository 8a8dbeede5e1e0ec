#include "dte/finite_sample.hpp"

#include <algorithm>
#include <cmath>

#include "dte/errors.hpp"
#include "dte/rng.hpp"

namespace dte {

SplitPlan make_split(const Sample& sample, double aux_fraction, std::uint64_t seed) {
  if (!(aux_fraction > 0.0 && aux_fraction < 1.0)) {
    throw ConfigError("aux_fraction must lie in (0, 1)");
  }
  SplitPlan plan;
  plan.aux_fraction = aux_fraction;
  Rng rng(seed);
  for (int arm : {1, 0}) {
    auto units = sample.arm_indices(arm);
    std::shuffle(units.begin(), units.end(), rng);
    const auto n_aux = static_cast<std::size_t>(std::llround(aux_fraction * static_cast<double>(units.size())));
    if (n_aux == 0 || n_aux == units.size()) {
      throw ConfigError("aux_fraction " + std::to_string(aux_fraction) + " leaves an empty " +
                        (arm == 1 ? "treated" : "control") + " part");
    }
    plan.aux.insert(plan.aux.end(), units.begin(), units.begin() + static_cast<std::ptrdiff_t>(n_aux));
    plan.main.insert(plan.main.end(), units.begin() + static_cast<std::ptrdiff_t>(n_aux), units.end());
    (arm == 1 ? plan.main_treated : plan.main_control) = units.size() - n_aux;
  }
  std::sort(plan.aux.begin(), plan.aux.end());
  std::sort(plan.main.begin(), plan.main.end());
  return plan;
}

double dkw_critical(double alpha, std::size_t n1_main, std::size_t n0_main) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (n1_main == 0 || n0_main == 0) throw DegenerateDesignError("main sample has an empty arm");
  return std::sqrt(std::log(2.0 / alpha) / 2.0) *
         (1.0 / std::sqrt(static_cast<double>(n1_main)) + 1.0 / std::sqrt(static_cast<double>(n0_main)));
}

SplitResult estimate_split(const Sample& sample, const SplitPlan& plan,
                           const AdjusterLearner& learner, double alpha, std::uint64_t seed,
                           Diagnostics* diag) {
  if (plan.main_treated == 0 || plan.main_control == 0) {
    throw DegenerateDesignError("sample split leaves an empty main arm");
  }
  SplitResult r;
  r.main_treated = plan.main_treated;
  r.main_control = plan.main_control;
  r.aux_fraction = plan.aux_fraction;
  r.c_alpha = dkw_critical(alpha, plan.main_treated, plan.main_control);
  r.c_half_alpha = dkw_critical(alpha / 2.0, plan.main_treated, plan.main_control);

  try {
    r.fit = learner.fit_predict(sample, plan.aux, plan.main, derive_seed(seed, 0x73706c6974), diag);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw EstimationError(std::string("auxiliary fit: ") + e.what());
  }
  const Sample main = sample.subset(plan.main);
  const Optimum lo = sup_delta(build_curve(main, r.fit.pair.lower));
  const Optimum up = inf_delta(build_curve(main, r.fit.pair.upper));
  r.theta_L = lo.value;
  r.t_L = lo.t_star;
  r.theta_U = 1.0 + up.value;
  r.t_U = up.t_star;

  r.lower = {clip01(r.theta_L - r.c_alpha), 1.0};
  r.upper = {0.0, clip01(r.theta_U + r.c_alpha)};
  const double a = r.theta_L - r.c_half_alpha, b = r.theta_U + r.c_half_alpha;
  r.crossed = a > b;
  r.two_sided = {clip01(a), clip01(b)};
  if (diag && r.crossed) diag->warn("sample-split two-sided interval endpoints cross");
  return r;
}

}  // namespace dte
