#pragma once

#include "dte/sample.hpp"

namespace dte {

// Adds delta to every control outcome, so bounds computed on the result
// target P(Y(1) - Y(0) <= delta).
Sample shift_for_delta(const Sample& sample, double delta);

// Maps outcomes through Phi((y - median) / IQR). A zero IQR falls back to the
// outcome range as scale; a constant outcome maps to 0.5 with a warning.
Sample squash_outcomes(const Sample& sample, Diagnostics* diag = nullptr);

// Linear-interpolation quantile of an unsorted vector (copy is sorted).
double quantile(std::vector<double> v, double p);

}  // namespace dte
