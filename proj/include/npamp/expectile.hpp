#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace npamp {

/// An expectile level together with the error expectile used as the loss
/// location. Valid when 0 < tau < 1 and u is finite.
struct ExpectileSpec {
  double tau = 0.5;
  double u = 0.0;
};

void validate(const ExpectileSpec& spec);

// Scalar expectile machinery. The kink convention is z <= u for the lower
// branch throughout; both branches agree at z == u.

inline double expectile_weight(double x, const ExpectileSpec& spec) {
  return x <= spec.u ? 1.0 - spec.tau : spec.tau;
}

/// |tau - 1{x <= u}| (x - u)^2
inline double expectile_loss(double x, const ExpectileSpec& spec) {
  const double r = x - spec.u;
  return expectile_weight(x, spec) * r * r;
}

/// Derivative of expectile_loss: 2 |1{x <= u} - tau| (x - u).
inline double expectile_subgradient(double x, const ExpectileSpec& spec) {
  return 2.0 * expectile_weight(x, spec) * (x - spec.u);
}

inline void check_step(double b) {
  if (!(b > 0.0)) throw std::invalid_argument("expectile: step parameter b must be positive");
}

/// argmin_x  b * rho_tau(x) + (x - z)^2 / 2
inline double prox_expectile(double z, double b, const ExpectileSpec& spec) {
  check_step(b);
  const double c = 2.0 * b * expectile_weight(z, spec);
  return (z + c * spec.u) / (c + 1.0);
}

/// Slope of the effective score in z on the branch containing z.
inline double effective_score_slope(double z, double b, const ExpectileSpec& spec) {
  check_step(b);
  const double c = 2.0 * b * expectile_weight(z, spec);
  return c / (c + 1.0);
}

/// b * rho'(prox(z; b)), which equals z - prox(z; b).
inline double effective_score(double z, double b, const ExpectileSpec& spec) {
  return effective_score_slope(z, b, spec) * (z - spec.u);
}

/// (delta / omega) * effective_score; delta = n/p and omega = s/p.
inline double rescaled_score(double z, double b, const ExpectileSpec& spec, double delta,
                             double omega) {
  if (!(delta > 0.0) || !(omega > 0.0)) {
    throw std::invalid_argument("rescaled_score: delta and omega must be positive");
  }
  return (delta / omega) * effective_score(z, b, spec);
}

/// sgn(x) max(|x| - theta, 0)
inline double soft_threshold(double x, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("soft_threshold: theta must be >= 0");
  if (x > theta) return x - theta;
  if (x < -theta) return x + theta;
  return 0.0;
}

/// The tau-expectile of a finite sample: the root of
///   u - mean(r) = (2 tau - 1)/(1 - tau) * mean((r - u) 1{r >= u}),
/// found by bisection on [min(r), max(r)].
double sample_expectile(std::span<const double> values, double tau);

}  // namespace npamp
