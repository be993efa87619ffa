#include "npamp/amp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npamp/errors.hpp"

namespace npamp {

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.5 + 0.25 * k);
  return grid;
}

void validate(const AmpSettings& settings) {
  require(!settings.alpha_grid.empty(), "AMP: alpha grid must be nonempty");
  for (double a : settings.alpha_grid) require(a > 0.0 && std::isfinite(a), "AMP: alpha values must be positive");
  require(settings.max_iter >= 1, "AMP: max_iter must be >= 1");
  require(settings.tol > 0.0, "AMP: tol must be positive");
  if (settings.omega_init) {
    require(*settings.omega_init > 0.0 && *settings.omega_init < 1.0, "AMP: omega_init must lie in (0, 1)");
  }
}

AmpState AmpState::initial(Eigen::Index p) {
  AmpState state;
  state.beta_hat = Eigen::VectorXd::Zero(p);
  return state;
}

Eigen::VectorXd score_vector(const Eigen::VectorXd& z, double b, const ExpectileSpec& spec,
                             double delta, double omega) {
  Eigen::VectorXd g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) g[i] = rescaled_score(z[i], b, spec, delta, omega);
  return g;
}

Eigen::VectorXd score_vector(const AmpFit& fit) {
  return score_vector(fit.state.z, fit.state.b, fit.spec, fit.delta, fit.state.omega);
}

Eigen::VectorXd adjust_residuals(const Dataset& data, const AmpState& state,
                                 const ExpectileSpec& spec, double delta) {
  if (state.beta_hat.size() != data.p()) throw std::invalid_argument("adjust_residuals: beta_hat has wrong length");
  Eigen::VectorXd z = data.y - data.x * state.beta_hat;
  if (state.has_history() && state.support_size > 0) {
    if (state.z.size() != data.n()) throw std::invalid_argument("adjust_residuals: residual history has wrong length");
    const double k_over_n = static_cast<double>(state.support_size) / static_cast<double>(data.n());
    z += k_over_n * score_vector(state.z, state.b, spec, delta, state.omega);
  }
  return z;
}

double update_b(const Eigen::VectorXd& z, Eigen::Index support_size, const ExpectileSpec& spec) {
  const Eigen::Index n = z.size();
  if (support_size <= 0) throw std::invalid_argument("update_b: support size must be positive");
  if (support_size >= n) {
    throw NumericalError("update_b: support size " + std::to_string(support_size) +
                         " >= n = " + std::to_string(n) + "; slope equation has no finite root");
  }
  Eigen::Index lower = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (z[i] <= spec.u) ++lower;
  }
  const double frac_lower = static_cast<double>(lower) / static_cast<double>(n);
  const double frac_upper = 1.0 - frac_lower;
  const double target = static_cast<double>(support_size) / static_cast<double>(n);
  auto slope = [&](double b) {
    const double c_lo = 2.0 * b * (1.0 - spec.tau);
    const double c_hi = 2.0 * b * spec.tau;
    return c_lo / (c_lo + 1.0) * frac_lower + c_hi / (c_hi + 1.0) * frac_upper;
  };

  // Increasing in b with range (0, 1); bisect on log b.
  double lo = 1e-8;
  double hi = 1e8;
  if (!(slope(lo) <= target && slope(hi) >= target)) {
    throw NumericalError("update_b: root not bracketed in [1e-8, 1e8]");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double f = slope(mid) - target;
    if (std::fabs(f) <= 1e-14 || mid <= lo || mid >= hi) return mid;
    if (f > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::sqrt(lo * hi);
}

AmpState amp_iterate(const Dataset& data, const AmpState& state, const ExpectileSpec& spec,
                     double delta, double omega, double alpha) {
  require(data.n() >= 2, "AMP: need n >= 2");
  require(omega > 0.0 && omega < 1.0, "AMP: omega must lie in (0, 1)");
  require(alpha > 0.0, "AMP: alpha must be positive");
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());

  AmpState next;
  next.t = state.t + 1;
  next.z = adjust_residuals(data, state, spec, delta);

  const auto s = static_cast<Eigen::Index>(std::llround(omega * p));
  next.omega = omega;
  next.b = update_b(next.z, std::max<Eigen::Index>(s, 1), spec);

  const Eigen::VectorXd g = score_vector(next.z, next.b, spec, delta, omega);
  next.zeta_sq = g.squaredNorm() / n;
  next.zeta_emp = std::sqrt(next.zeta_sq);
  next.theta = alpha * next.zeta_emp;

  next.beta_tilde = state.beta_hat + data.x.transpose() * g;
  next.beta_hat.resize(data.p());
  next.support_size = 0;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    next.beta_hat[j] = soft_threshold(next.beta_tilde[j], next.theta);
    if (next.beta_hat[j] != 0.0) ++next.support_size;
  }
  if (!std::isfinite(next.zeta_sq) || !next.beta_tilde.allFinite()) {
    throw NumericalError("AMP: non-finite iterate at t = " + std::to_string(next.t));
  }
  return next;
}

AmpFit run_amp_fixed_alpha(const Dataset& data, const ExpectileSpec& spec, double alpha,
                           const AmpSettings& settings) {
  validate(data);
  validate(spec);
  validate(settings);
  require(alpha > 0.0, "AMP: alpha must be positive");
  require(data.n() <= data.p(), "AMP: n > p is not supported (need n/p in (0, 1])");

  const double p = static_cast<double>(data.p());
  const double delta = static_cast<double>(data.n()) / p;
  const double omega_init =
      settings.omega_init.value_or(std::max(std::floor(0.05 * p), 1.0) / p);

  AmpFit fit;
  fit.spec = spec;
  fit.alpha = alpha;
  fit.delta = delta;

  AmpState state = AmpState::initial(data.p());
  for (int it = 0; it < settings.max_iter; ++it) {
    if (state.support_size >= data.p()) {
      throw NumericalError("AMP: estimate became fully dense at t = " + std::to_string(state.t));
    }
    const double omega =
        state.has_history() ? static_cast<double>(std::max<Eigen::Index>(state.support_size, 1)) / p
                            : omega_init;
    AmpState next = amp_iterate(data, state, spec, delta, omega, alpha);
    const double change = (next.beta_hat - state.beta_hat).norm() / std::max(1.0, state.beta_hat.norm());
    state = std::move(next);
    fit.iterations = it + 1;
    // The first pass starts from the bootstrap omega, so it never counts.
    if (it > 0 && change < settings.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.omega = state.omega;
  fit.state = std::move(state);
  return fit;
}

AmpFit run_amp(const Dataset& data, const ExpectileSpec& spec, const AmpSettings& settings) {
  validate(settings);
  std::optional<AmpFit> best;
  std::vector<AlphaTrial> trials;
  auto better = [](const AmpFit& a, const AmpFit& b) {
    if (a.converged != b.converged) return a.converged;
    return a.state.zeta_emp < b.state.zeta_emp;
  };
  for (double alpha : settings.alpha_grid) {
    AlphaTrial trial;
    trial.alpha = alpha;
    try {
      AmpFit fit = run_amp_fixed_alpha(data, spec, alpha, settings);
      trial.converged = fit.converged;
      trial.iterations = fit.iterations;
      trial.zeta_emp = fit.state.zeta_emp;
      if (!best || better(fit, *best)) best = std::move(fit);
    } catch (const NumericalError& e) {
      trial.failure = e.what();
    }
    trials.push_back(std::move(trial));
  }
  if (!best) throw NumericalError("AMP: every alpha on the grid aborted");
  best->trials = std::move(trials);
  return std::move(*best);
}

}  // namespace npamp
