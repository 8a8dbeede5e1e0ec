#include "dte/report.hpp"

#include <cmath>
#include <cstdio>

namespace dte {

Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v < 0 ? "-inf" : "inf";
}

Json to_json(const BoundsEstimate& b) {
  Json j;
  j["theta_L"] = num(b.theta_L);
  j["theta_U"] = num(b.theta_U);
  j["t_L"] = num(b.t_L);
  j["t_U"] = num(b.t_U);
  j["sigma2_L"] = num(b.sigma2_L);
  j["sigma2_U"] = num(b.sigma2_U);
  j["sigma_LU"] = num(b.sigma_LU);
  j["pi_hat"] = num(b.pi_hat);
  j["n"] = b.n;
  return j;
}

Json to_json(const Interval& i) { return Json::array({num(i.lo), num(i.hi)}); }

Json to_json(const OneSidedReport& r) {
  Json j;
  j["z_alpha"] = num(r.z);
  j["se_L"] = num(r.se_L);
  j["se_U"] = num(r.se_U);
  j["lower_ci"] = to_json(r.lower);
  j["upper_ci"] = to_json(r.upper);
  j["p_value_lower_is_0"] = num(r.p_L);
  j["p_value_upper_is_1"] = num(r.p_U);
  j["degenerate_L"] = r.degenerate_L;
  j["degenerate_U"] = r.degenerate_U;
  return j;
}

Json to_json(const StoyeInterval& s) {
  Json j;
  j["h_rule"] = to_string(s.rule);
  j["h_n"] = num(s.h_n);
  j["lambda"] = num(s.lambda);
  j["c_L"] = num(s.c_L);
  j["c_U"] = num(s.c_U);
  j["interval"] = to_json(Interval{s.lo, s.hi});
  j["empty"] = s.empty;
  j["degenerate"] = s.degenerate;
  return j;
}

Json to_json(const SplitResult& r) {
  Json j;
  j["theta_L"] = num(r.theta_L);
  j["theta_U"] = num(r.theta_U);
  j["t_L"] = num(r.t_L);
  j["t_U"] = num(r.t_U);
  j["c_alpha"] = num(r.c_alpha);
  j["c_half_alpha"] = num(r.c_half_alpha);
  j["lower_ci"] = to_json(r.lower);
  j["upper_ci"] = to_json(r.upper);
  j["two_sided_ci"] = to_json(r.two_sided);
  j["crossed"] = r.crossed;
  j["main_treated"] = r.main_treated;
  j["main_control"] = r.main_control;
  j["aux_fraction"] = num(r.aux_fraction);
  j["model_L"] = r.fit.model_L;
  j["model_U"] = r.fit.model_U;
  return j;
}

Json to_json(const std::vector<FoldFitInfo>& folds) {
  Json arr = Json::array();
  for (const auto& f : folds) {
    Json j;
    j["fold"] = f.fold;
    j["model_L"] = f.model_L;
    j["model_U"] = f.model_U;
    j["mean_s_L"] = num(f.mean_L);
    j["sd_s_L"] = num(f.sd_L);
    j["mean_s_U"] = num(f.mean_U);
    j["sd_s_U"] = num(f.sd_U);
    arr.push_back(j);
  }
  return arr;
}

void TextTable::row(const std::string& label, const std::string& value) {
  rows_.emplace_back(label, value);
}

void TextTable::section(const std::string& title) { rows_.emplace_back("#" + title, ""); }

std::string TextTable::str() const {
  std::size_t w = 0;
  for (const auto& [l, v] : rows_) {
    if (l.rfind('#', 0) != 0) w = std::max(w, l.size());
  }
  std::string out;
  for (const auto& [l, v] : rows_) {
    if (l.rfind('#', 0) == 0) {
      if (!out.empty()) out += '\n';
      out += l.substr(1) + '\n';
      continue;
    }
    out += "  " + l + std::string(w - l.size() + 2, ' ') + v + '\n';
  }
  return out;
}

std::string fmt(double v, int digits) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v < 0 ? "-inf" : "inf");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string fmt_interval(const Interval& i, int digits) {
  return "[" + fmt(i.lo, digits) + ", " + fmt(i.hi, digits) + "]";
}

}  // namespace dte
