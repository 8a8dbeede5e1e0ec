#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "dte/config.hpp"
#include "dte/ecdf.hpp"
#include "dte/report.hpp"

namespace dte {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitEstimation = 3, kExitIo = 4 };

struct AnalysisOutput {
  Json report;
  std::string text;
  // Curves behind the reported bounds (lower adjuster, upper adjuster).
  std::optional<DeltaCurve> curve_L;
  std::optional<DeltaCurve> curve_U;
};

// Runs the configured estimator end to end on cfg.input.
AnalysisOutput run_analysis(const RunConfig& cfg);

// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

// Full command line: `analyze | simulate | bounds-curve` with --config FILE and
// one flag per configuration key; flags override the file.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dte
