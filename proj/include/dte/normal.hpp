#pragma once

namespace dte {

double normal_cdf(double x);
double normal_pdf(double x);
// Inverse standard normal CDF; p in (0, 1).
double normal_quantile(double p);
// Upper-tail critical value z_a = Phi^{-1}(1 - a).
double z_crit(double a);

}  // namespace dte
