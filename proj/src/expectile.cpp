#include "npamp/expectile.hpp"

#include <algorithm>
#include <numeric>

#include "npamp/errors.hpp"

namespace npamp {

void validate(const ExpectileSpec& spec) {
  require(spec.tau > 0.0 && spec.tau < 1.0, "expectile level tau must lie in (0, 1)");
  require(std::isfinite(spec.u), "error expectile u must be finite");
}

double sample_expectile(std::span<const double> values, double tau) {
  require(!values.empty(), "sample_expectile: empty sample");
  require(tau > 0.0 && tau < 1.0, "sample_expectile: tau must lie in (0, 1)");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (tau == 0.5) return mean;

  const double k = (2.0 * tau - 1.0) / (1.0 - tau);
  auto defining = [&](double u) {
    double upper = 0.0;
    for (double r : values) {
      if (r >= u) upper += r - u;
    }
    return u - mean - k * upper / n;
  };

  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  // Strictly increasing with defining(min) <= 0 <= defining(max).
  const double width_tol = 1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
  for (int it = 0; it < 200 && hi - lo > width_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (defining(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace npamp
