#pragma once

// JSON and plain-text rendering of estimates and intervals.

#include <string>
#include <vector>

#include <json.hpp>

#include "dte/cross_fit.hpp"
#include "dte/finite_sample.hpp"
#include "dte/stoye.hpp"

namespace dte {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSoftwareVersion = "dtebounds 1.0.0";

// Finite values as numbers; infinities as the strings "-inf" / "inf".
Json num(double v);

Json to_json(const BoundsEstimate& b);
Json to_json(const OneSidedReport& r);
Json to_json(const StoyeInterval& s);
Json to_json(const Interval& i);
Json to_json(const SplitResult& r);
Json to_json(const std::vector<FoldFitInfo>& folds);

// Aligned "label  value" lines.
class TextTable {
 public:
  void row(const std::string& label, const std::string& value);
  void section(const std::string& title);
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

std::string fmt(double v, int digits = 4);
std::string fmt_interval(const Interval& i, int digits = 4);

}  // namespace dte
