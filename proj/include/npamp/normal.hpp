#pragma once

#include <span>

namespace npamp {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF, via erfc so both tails keep full relative precision.
double normal_cdf(double x);

/// 1 - Phi(x), computed without cancellation.
double normal_sf(double x);

/// Inverse of the standard normal CDF. Acklam's rational approximation
/// followed by one Halley refinement step; absolute error below 1e-14 on
/// (1e-300, 1 - 1e-16). Throws std::invalid_argument outside (0, 1).
double normal_quantile(double p);

/// Two-sided p-value 2(1 - Phi(|t|)).
double two_sided_p_value(double t);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - Phi|
  double p_value = 1.0;    // asymptotic Kolmogorov p-value
};

/// One-sample Kolmogorov-Smirnov test of `sample` against N(0, 1).
KsResult ks_test_normal(std::span<const double> sample);

/// Survival function of the Kolmogorov distribution, Q_KS(lambda).
double kolmogorov_sf(double lambda);

}  // namespace npamp
