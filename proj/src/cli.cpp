#include "dte/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dte/cross_fit.hpp"
#include "dte/errors.hpp"
#include "dte/finite_sample.hpp"
#include "dte/folds.hpp"
#include "dte/io.hpp"
#include "dte/learners.hpp"
#include "dte/propensity.hpp"
#include "dte/rng.hpp"
#include "dte/sim.hpp"
#include "dte/stoye.hpp"
#include "dte/transforms.hpp"

namespace dte {

namespace {

struct Seeds {
  std::uint64_t master, folds, fit, split;
  explicit Seeds(std::uint64_t m)
      : master(m), folds(derive_seed(m, 1)), fit(derive_seed(m, 2)), split(derive_seed(m, 3)) {}
};

std::unique_ptr<AdjusterLearner> build_learner(const RunConfig& cfg, const Sample& sample,
                                               GridSpec grid) {
  if (!cfg.adjusters.empty()) {
    auto cols = read_columns(cfg.adjusters, {"s_L", "s_U"});
    if (cols[0].size() != sample.size()) {
      throw ConfigError("adjusters: file has " + std::to_string(cols[0].size()) + " rows for " +
                        std::to_string(sample.size()) + " units");
    }
    return std::make_unique<FixedAdjusterLearner>(std::move(cols[0]), std::move(cols[1]),
                                                  AdjusterLabel::user);
  }
  if (cfg.model == "oracle") {
    throw ConfigError("model: 'oracle' is only available in simulate");
  }
  return make_learner(parse_model_list(cfg.model), grid, cfg.cv_folds);
}

Json diagnostics_json(const Diagnostics& d) {
  Json arr = Json::array();
  for (const auto& w : d.warnings) arr.push_back(w);
  return arr;
}

void add_asymptotic(Json& rep, TextTable& tt, const BoundsEstimate& est, const RunConfig& cfg,
                    bool with_stoye) {
  const OneSidedReport os = one_sided_cis(est, cfg.alpha);
  rep["one_sided"] = to_json(os);
  const Interval bonf = bonferroni_interval(est, cfg.alpha);
  rep["bonferroni_two_sided"] = to_json(bonf);

  tt.section("Inference (alpha = " + fmt(cfg.alpha, 3) + ")");
  tt.row("se lower / upper", fmt(os.se_L) + " / " + fmt(os.se_U));
  tt.row("lower one-sided CI", fmt_interval(os.lower));
  tt.row("upper one-sided CI", fmt_interval(os.upper));
  tt.row("p-value (lower = 0)", fmt(os.p_L) + (os.degenerate_L ? " (zero variance)" : ""));
  tt.row("p-value (upper = 1)", fmt(os.p_U) + (os.degenerate_U ? " (zero variance)" : ""));
  tt.row("Bonferroni two-sided", fmt_interval(bonf));

  if (!with_stoye) return;
  Json st = Json::array();
  const HRule chosen = parse_h_rule(cfg.h_rule);
  for (HRule rule : {HRule::loglog, HRule::log, HRule::q_loglog}) {
    try {
      const StoyeInterval s = stoye_ci(est, cfg.alpha, rule);
      Json j = to_json(s);
      j["selected"] = rule == chosen;
      st.push_back(j);
      tt.row(std::string("Stoye CI, h_n ") + to_string(rule) + (rule == chosen ? " *" : ""),
             (s.empty ? std::string("empty") : fmt_interval({s.lo, s.hi})) + "  (cL " + fmt(s.c_L, 3) +
                 ", cU " + fmt(s.c_U, 3) + ", Lambda " + fmt(s.lambda, 3) + ")");
    } catch (const std::exception& e) {
      Json j;
      j["h_rule"] = to_string(rule);
      j["error"] = e.what();
      st.push_back(j);
      tt.row(std::string("Stoye CI, h_n ") + to_string(rule), std::string("failed: ") + e.what());
    }
  }
  rep["stoye"] = st;
}

void add_estimate_rows(TextTable& tt, const BoundsEstimate& est) {
  tt.section("Estimates");
  const auto at = [](double t) {
    return std::isnan(t) ? std::string("   (per-fold thresholds)") : "   (t = " + fmt(t) + ")";
  };
  tt.row("lower bound", fmt(est.theta_L) + at(est.t_L));
  tt.row("upper bound", fmt(est.theta_U) + at(est.t_U));
  tt.row("sigma2 L / U / LU", fmt(est.sigma2_L) + " / " + fmt(est.sigma2_U) + " / " + fmt(est.sigma_LU));
}

}  // namespace

AnalysisOutput run_analysis(const RunConfig& cfg) {
  validate(cfg);
  const bool needs_group = cfg.method == "cross-fit-group" || cfg.propensity_mode == "group";
  if (needs_group && cfg.group_col.empty()) {
    throw ConfigError("column.group: required for method cross-fit-group / propensity.mode group");
  }
  if (cfg.propensity_mode == "known_function" && cfg.propensity_col.empty()) {
    throw ConfigError("column.propensity: required for propensity.mode known_function");
  }
  CsvSchema schema{cfg.y_col, cfg.d_col, cfg.x_prefix, cfg.group_col, cfg.propensity_col};
  Dataset ds = load_dataset(cfg.input, schema);

  Diagnostics diag;
  Sample sample = shift_for_delta(ds.sample, cfg.delta);
  if (cfg.squash) sample = squash_outcomes(sample, &diag);

  PropensityModel pm;
  pm.mode = parse_propensity_mode(cfg.propensity_mode);
  pm.pi = cfg.propensity_pi;
  pm.group_of = ds.group;
  pm.p_of_x = ds.propensity;
  pm.epsilon = cfg.propensity_epsilon;

  GridSpec grid;
  grid.kind = cfg.grid == "equispaced" ? GridSpec::Kind::equispaced : GridSpec::Kind::random_normal;
  grid.size = cfg.grid_size;
  const auto learner = build_learner(cfg, sample, grid);
  const Seeds seeds(cfg.seed);
  DiagnosticOptions dopt;
  dopt.flat_fraction = cfg.flat_fraction;

  AnalysisOutput out;
  Json rep;
  rep["software"] = kSoftwareVersion;
  rep["method"] = cfg.method;
  rep["learner"] = learner->name();
  Json data;
  data["n"] = sample.size();
  data["n_treated"] = sample.n_treated();
  data["n_control"] = sample.n_control();
  data["covariates"] = ds.covariate_names;
  data["delta"] = num(sample.delta());
  data["squashed"] = sample.squashed();
  data["scale"] = sample.squashed() ? "bounds refer to squashed outcomes" : "original outcomes";
  rep["data"] = data;

  TextTable tt;
  tt.section("Distributional treatment effect bounds: P(Y(1) - Y(0) <= " + fmt(cfg.delta) + ")");
  tt.row("method", cfg.method);
  tt.row("learner", learner->name());
  tt.row("units (treated / control)", std::to_string(sample.size()) + " (" +
                                          std::to_string(sample.n_treated()) + " / " +
                                          std::to_string(sample.n_control()) + ")");
  if (sample.squashed()) tt.row("outcome scale", "squashed (normal CDF of robust z-score)");

  if (cfg.method == "sample-split") {
    const SplitPlan plan = make_split(sample, cfg.aux_fraction, seeds.split);
    const SplitResult r = estimate_split(sample, plan, *learner, cfg.alpha, seeds.fit, &diag);
    rep["estimate"] = to_json(r);
    const Sample main = sample.subset(plan.main);
    out.curve_L = build_curve(main, r.fit.pair.lower);
    out.curve_U = build_curve(main, r.fit.pair.upper);
    tt.section("Estimates (main sample)");
    tt.row("lower bound", fmt(r.theta_L) + "   (t = " + fmt(r.t_L) + ")");
    tt.row("upper bound", fmt(r.theta_U) + "   (t = " + fmt(r.t_U) + ")");
    tt.row("main arms (treated / control)",
           std::to_string(r.main_treated) + " / " + std::to_string(r.main_control));
    tt.section("Finite-sample inference (alpha = " + fmt(cfg.alpha, 3) + ")");
    tt.row("c_alpha / c_alpha/2", fmt(r.c_alpha) + " / " + fmt(r.c_half_alpha));
    tt.row("lower one-sided CI", fmt_interval(r.lower));
    tt.row("upper one-sided CI", fmt_interval(r.upper));
    tt.row("two-sided CI", fmt_interval(r.two_sided) + (r.crossed ? "  (endpoints crossed)" : ""));
  } else {
    const FoldPlan folds = cfg.method == "cross-fit-group"
                               ? make_group_folds(sample, ds.group, cfg.k_folds, seeds.folds)
                               : make_folds(sample, cfg.k_folds, seeds.folds);
    const bool stoye_ok = cfg.alpha < 0.5;
    if (cfg.method == "cross-fit") {
      const CrossFitResult r = estimate_crossfit(sample, folds, *learner, seeds.fit, &diag, dopt);
      rep["estimate"] = to_json(r.est);
      rep["folds"] = to_json(r.adjusters.folds);
      out.curve_L = build_curve(sample, r.adjusters.pair.lower);
      out.curve_U = build_curve(sample, r.adjusters.pair.upper);
      add_estimate_rows(tt, r.est);
      add_asymptotic(rep, tt, r.est, cfg, stoye_ok);
    } else if (cfg.method == "cross-fit-foldt") {
      const FoldTResult r = variant_fold_t(sample, folds, *learner, seeds.fit, &diag);
      rep["estimate"] = to_json(r.est);
      rep["folds"] = to_json(r.adjusters.folds);
      Json ts = Json::array();
      for (std::size_t k = 0; k < r.t_L.size(); ++k) {
        ts.push_back({{"fold", k + 1}, {"t_L", num(r.t_L[k])}, {"t_U", num(r.t_U[k])}});
      }
      rep["fold_thresholds"] = ts;
      add_estimate_rows(tt, r.est);
      add_asymptotic(rep, tt, r.est, cfg, stoye_ok);
    } else if (cfg.method == "cross-fit-group") {
      const CrossFitResult r =
          variant_group_propensity(sample, ds.group, folds, *learner, seeds.fit, &diag);
      rep["estimate"] = to_json(r.est);
      rep["folds"] = to_json(r.adjusters.folds);
      const auto w = group_unit_weights(sample, ds.group);
      out.curve_L = build_weighted_curve(sample, r.adjusters.pair.lower, w);
      out.curve_U = build_weighted_curve(sample, r.adjusters.pair.upper, w);
      add_estimate_rows(tt, r.est);
      add_asymptotic(rep, tt, r.est, cfg, stoye_ok);
    } else {
      // cross-fit-ipw and sjls share the weighted curves.
      if (pm.mode == PropensityMode::in_sample) {
        diag.warn("propensity.mode in_sample: weights use the sample treated share, not a known propensity");
      }
      const auto prop = pm.unit_propensities(sample);
      const auto adj = crossfit_adjusters(sample, folds, *learner, seeds.fit, &diag);
      rep["folds"] = to_json(adj.folds);
      out.curve_L = build_curve(sample, adj.pair.lower, WeightMode::ipw_unnormalized, prop);
      out.curve_U = build_curve(sample, adj.pair.upper, WeightMode::ipw_unnormalized, prop);
      const BoundsEstimate caide = estimate_ipw_from_adjusters(sample, adj.pair, prop, &diag);
      if (cfg.method == "sjls") {
        const BoundsEstimate s = sjls_estimate(sample, adj.pair, prop);
        rep["estimate"] = to_json(s);
        rep["estimate_clipped"] = {{"theta_L", clip01(s.theta_L)}, {"theta_U", clip01(s.theta_U)}};
        rep["optimized_same_weights"] = to_json(caide);
        rep["dominance_gap_lower"] = num(caide.theta_L - s.theta_L);
        rep["dominance_gap_upper"] = num(s.theta_U - caide.theta_U);
        add_estimate_rows(tt, s);
        tt.row("optimized lower / upper", fmt(caide.theta_L) + " / " + fmt(caide.theta_U));
        add_asymptotic(rep, tt, s, cfg, stoye_ok);
      } else {
        rep["estimate"] = to_json(caide);
        rep["estimate_clipped"] = {{"theta_L", clip01(caide.theta_L)}, {"theta_U", clip01(caide.theta_U)}};
        add_estimate_rows(tt, caide);
        add_asymptotic(rep, tt, caide, cfg, stoye_ok);
      }
    }
    if (!stoye_ok) diag.warn("alpha >= 0.5: Stoye intervals not computed");
  }

  rep["diagnostics"] = diagnostics_json(diag);
  rep["seeds"] = {{"master", seeds.master}, {"folds", seeds.folds}, {"fit", seeds.fit}, {"split", seeds.split}};
  rep["config"] = config_json(cfg);
  if (!diag.warnings.empty()) {
    tt.section("Diagnostics");
    for (const auto& w : diag.warnings) tt.row("warning", w);
  }
  out.report = std::move(rep);
  out.text = tt.str();
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DegenerateDesignError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  return kExitEstimation;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << content;
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const AnalysisOutput a = run_analysis(cfg);
  const std::string json = a.report.dump(2) + "\n";
  if (!cfg.output.empty()) {
    write_file(cfg.output + ".json", json);
    write_file(cfg.output + ".txt", a.text);
  }
  out << (cfg.format == "json" ? json : a.text);
}

void cmd_bounds_curve(const RunConfig& cfg, std::ostream& out) {
  const AnalysisOutput a = run_analysis(cfg);
  const Optimum lo = sup_delta(*a.curve_L);
  const Optimum up = inf_delta(*a.curve_U);
  Json j;
  j["software"] = kSoftwareVersion;
  j["lower"] = {{"t_star", num(lo.t_star)}, {"value", num(lo.value)}, {"theta_L", num(lo.value)}};
  j["upper"] = {{"t_star", num(up.t_star)}, {"value", num(up.value)}, {"theta_U", num(1.0 + up.value)}};
  j["config"] = config_json(cfg);
  std::ostringstream cl, cu;
  write_curve(cl, *a.curve_L);
  write_curve(cu, *a.curve_U);
  if (!cfg.output.empty()) {
    write_file(cfg.output + "_lower.csv", cl.str());
    write_file(cfg.output + "_upper.csv", cu.str());
    write_file(cfg.output + ".json", j.dump(2) + "\n");
    out << "lower: t* = " << fmt(lo.t_star, 6) << ", sup = " << fmt(lo.value, 6) << '\n'
        << "upper: t* = " << fmt(up.t_star, 6) << ", inf = " << fmt(up.value, 6) << '\n';
    return;
  }
  out << "# lower adjuster curve; t* = " << format_double(lo.t_star)
      << ", sup = " << format_double(lo.value) << '\n'
      << cl.str() << "# upper adjuster curve; t* = " << format_double(up.t_star)
      << ", inf = " << format_double(up.value) << '\n'
      << cu.str();
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  validate(cfg);
  std::istringstream cells_in(read_file(cfg.cells));
  TableConfig tc;
  tc.cells = read_cells(cells_in);
  tc.reps = cfg.reps;
  tc.alpha = cfg.alpha;
  tc.seed = cfg.seed;
  tc.k_folds = cfg.k_folds;
  tc.cv_folds = cfg.cv_folds;
  tc.aux_fraction = cfg.aux_fraction;
  tc.grid.kind = cfg.grid == "equispaced" ? GridSpec::Kind::equispaced : GridSpec::Kind::random_normal;
  tc.grid.size = cfg.grid_size;
  tc.oracle_inner_reps = cfg.oracle_inner_reps;
  tc.theta0_reps = cfg.theta0_reps;
  tc.threads = cfg.threads;
  tc.spec.delta = cfg.delta;
  const McReport rep = run_table(tc);

  std::ostringstream csv;
  write_table_csv(csv, rep);
  Json j;
  j["software"] = kSoftwareVersion;
  j["theta0"] = num(rep.theta0);
  j["theta0_se"] = num(rep.theta0_se);
  j["master_seed"] = cfg.seed;
  j["seed_scheme"] = "data seed from (master, n, replication); algorithm seed from (master, cell, replication)";
  Json cells = Json::array();
  for (const auto& c : rep.cells) {
    Json cj;
    cj["id"] = c.cell.id();
    cj["reps_ok"] = c.reps;
    cj["failures"] = c.failures;
    cj["failure_messages"] = c.failure_messages;
    if (c.cell.model != "constant" && c.cell.model != "oracle") cj["note"] = "learner-substituted";
    cells.push_back(cj);
  }
  j["cells"] = cells;
  j["config"] = config_json(cfg);
  if (!cfg.output.empty()) {
    write_file(cfg.output + ".csv", csv.str());
    write_file(cfg.output + ".json", j.dump(2) + "\n");
  }
  out << csv.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds on the distribution of treatment effects"};
  app.require_subcommand(1, 1);
  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, std::string> config_files;
  for (const char* name : {"analyze", "simulate", "bounds-curve"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_files[name], "key = value file or a previous JSON report");
    for (const auto& key : config_keys()) {
      if (key == "subcommand") continue;
      std::string flag = key;
      for (char& ch : flag) {
        if (ch == '.' || ch == '_') ch = '-';
      }
      sub->add_option("--" + flag, flag_values[name][key]);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    RunConfig cfg;
    if (!config_files[name].empty()) {
      for (const auto& [k, v] : parse_config_text(read_file(config_files[name]))) {
        if (k == "subcommand") continue;
        apply_setting(cfg, k, v);
      }
    }
    for (const auto& key : config_keys()) {
      if (key == "subcommand") continue;
      std::string flag = key;
      for (char& ch : flag) {
        if (ch == '.' || ch == '_') ch = '-';
      }
      if (sub->count("--" + flag) > 0) apply_setting(cfg, key, flag_values[name][key]);
    }
    cfg.subcommand = name;
    if (name == "analyze") {
      cmd_analyze(cfg, out);
    } else if (name == "simulate") {
      cmd_simulate(cfg, out);
    } else {
      cmd_bounds_curve(cfg, out);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace dte
