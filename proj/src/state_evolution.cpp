#include "npamp/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npamp/errors.hpp"

namespace npamp {

SignalPrior SignalPrior::gaussian_slab(double nonzero_prob, double slab_sd) {
  require(nonzero_prob >= 0.0 && nonzero_prob <= 1.0, "signal prior: mixing probability must lie in [0, 1]");
  require(slab_sd >= 0.0 && std::isfinite(slab_sd), "signal prior: slab sd must be finite and >= 0");
  SignalPrior prior;
  prior.kind_ = Kind::GaussianSlab;
  prior.nonzero_prob_ = nonzero_prob;
  prior.slab_sd_ = slab_sd;
  return prior;
}

SignalPrior SignalPrior::atoms(double nonzero_prob, std::vector<double> values) {
  require(nonzero_prob >= 0.0 && nonzero_prob <= 1.0, "signal prior: mixing probability must lie in [0, 1]");
  require(!values.empty(), "signal prior: atom set must be nonempty");
  for (double v : values) require(std::isfinite(v), "signal prior: atoms must be finite");
  SignalPrior prior;
  prior.kind_ = Kind::Atoms;
  prior.nonzero_prob_ = nonzero_prob;
  prior.values_ = std::move(values);
  return prior;
}

SignalPrior SignalPrior::empirical(std::vector<double> coefficients) {
  require(!coefficients.empty(), "signal prior: coefficient vector must be nonempty");
  for (double v : coefficients) require(std::isfinite(v), "signal prior: coefficients must be finite");
  SignalPrior prior;
  prior.kind_ = Kind::Empirical;
  const auto nonzero = std::count_if(coefficients.begin(), coefficients.end(), [](double v) { return v != 0.0; });
  prior.nonzero_prob_ = static_cast<double>(nonzero) / static_cast<double>(coefficients.size());
  prior.values_ = std::move(coefficients);
  return prior;
}

SignalPrior SignalPrior::shifted(const std::vector<double>& beta0, const std::vector<double>& gamma0,
                                 double u) {
  require(beta0.size() == gamma0.size(), "signal prior: beta0 and gamma0 lengths differ");
  std::vector<double> combined(beta0.size());
  for (std::size_t j = 0; j < beta0.size(); ++j) combined[j] = beta0[j] + u * gamma0[j];
  return empirical(std::move(combined));
}

double SignalPrior::sample(Rng& rng) const {
  if (kind_ == Kind::Empirical) {
    return values_[std::uniform_int_distribution<std::size_t>(0, values_.size() - 1)(rng)];
  }
  const bool nonzero = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < nonzero_prob_;
  if (kind_ == Kind::GaussianSlab) {
    const double draw = std::normal_distribution<double>(0.0, 1.0)(rng);
    return nonzero ? slab_sd_ * draw : 0.0;
  }
  const std::size_t k = std::uniform_int_distribution<std::size_t>(0, values_.size() - 1)(rng);
  return nonzero ? values_[k] : 0.0;
}

double SignalPrior::second_moment() const {
  switch (kind_) {
    case Kind::GaussianSlab:
      return nonzero_prob_ * slab_sd_ * slab_sd_;
    case Kind::Atoms: {
      double ss = 0.0;
      for (double v : values_) ss += v * v;
      return nonzero_prob_ * ss / static_cast<double>(values_.size());
    }
    case Kind::Empirical: {
      double ss = 0.0;
      for (double v : values_) ss += v * v;
      return ss / static_cast<double>(values_.size());
    }
  }
  return 0.0;
}

namespace {

struct SignalDraws {
  std::vector<double> b;
  std::vector<double> z;
};

SignalDraws draw_signal(const SignalPrior& prior, int count, std::uint64_t seed) {
  Rng rng(seed);
  SignalDraws draws;
  draws.b.resize(count);
  draws.z.resize(count);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    draws.b[i] = prior.sample(rng);
    draws.z[i] = gauss(rng);
  }
  return draws;
}

struct ThresholdMoments {
  double mse = 0.0;
  double nonzero_fraction = 0.0;
};

ThresholdMoments threshold_moments(const SignalDraws& draws, double zeta, double theta) {
  double mse = 0.0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < draws.b.size(); ++i) {
    const double est = soft_threshold(draws.b[i] + zeta * draws.z[i], theta);
    mse += (est - draws.b[i]) * (est - draws.b[i]);
    if (est != 0.0) ++nonzero;
  }
  const double m = static_cast<double>(draws.b.size());
  return {mse / m, static_cast<double>(nonzero) / m};
}

void check_options(const SeOptions& options) {
  require(options.mc_samples >= 10000, "state evolution: mc_samples must be >= 1e4");
}

}  // namespace

double amse(const SignalPrior& prior, double zeta, double theta, const SeOptions& options) {
  require(zeta >= 0.0 && theta >= 0.0, "amse: zeta and theta must be >= 0");
  check_options(options);
  return threshold_moments(draw_signal(prior, options.mc_samples, options.seed), zeta, theta).mse;
}

SeStep se_step(const SeState& prev, const SignalPrior& prior, const ErrorDistribution& err,
               const ExpectileSpec& spec, double delta, std::optional<double> omega, double alpha,
               const SeOptions& options) {
  validate(spec);
  check_options(options);
  require(delta > 0.0 && delta <= 1.0, "state evolution: delta must lie in (0, 1]");
  require(alpha > 0.0, "state evolution: alpha must be positive");
  require(prev.zeta_sq >= 0.0 && prev.theta >= 0.0, "state evolution: previous state must be nonnegative");

  const SignalDraws signal = draw_signal(prior, options.mc_samples, options.seed);
  const ThresholdMoments moments = threshold_moments(signal, std::sqrt(prev.zeta_sq), prev.theta);

  SeStep step;
  step.nonzero_fraction = moments.nonzero_fraction;
  step.sigma_sq = moments.mse / delta;
  step.omega = omega.value_or(std::max(moments.nonzero_fraction, 1e-6));
  require(step.omega > 0.0 && step.omega < 1.0, "state evolution: omega must lie in (0, 1)");
  {
    // Residual-side draws use an independent stream derived from the seed.
    Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma = std::sqrt(step.sigma_sq);
    std::vector<double> z(options.mc_samples);
    for (double& v : z) {
      const double e = err.sample(rng);
      v = e + sigma * gauss(rng);
    }
    const double lower = static_cast<double>(std::count_if(z.begin(), z.end(), [&](double v) { return v <= spec.u; })) /
                         static_cast<double>(z.size());
    // E[d/dz G] = (delta/omega) (c_lo P(z <= u) + c_hi P(z > u)) = 1.
    const double target = step.omega / delta;
    if (!(target < 1.0)) {
      throw NumericalError("state evolution: omega/delta >= 1, slope condition has no root");
    }
    auto slope = [&](double b) {
      const double c_lo = 2.0 * b * (1.0 - spec.tau);
      const double c_hi = 2.0 * b * spec.tau;
      return c_lo / (c_lo + 1.0) * lower + c_hi / (c_hi + 1.0) * (1.0 - lower);
    };
    double lo = 1e-8;
    double hi = 1e8;
    if (!(slope(lo) <= target && slope(hi) >= target)) {
      throw NumericalError("state evolution: slope-1 root not bracketed");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (mid <= lo || mid >= hi) break;
      (slope(mid) > target ? hi : lo) = mid;
    }
    step.b = std::sqrt(lo * hi);
    double ss = 0.0;
    for (double v : z) {
      const double g = rescaled_score(v, step.b, spec, delta, step.omega);
      ss += g * g;
    }
    step.zeta_sq = ss / static_cast<double>(z.size());
    step.theta = alpha * std::sqrt(step.zeta_sq);
    if (!std::isfinite(step.zeta_sq) || !std::isfinite(step.sigma_sq)) {
      throw NumericalError("state evolution: non-finite state");
    }
  }
  return step;
}

SeParams run_state_evolution(const SignalPrior& prior, const ErrorDistribution& err,
                             const ExpectileSpec& spec, double delta, double alpha, int iterations,
                             double omega_init, const SeOptions& options) {
  require(iterations >= 1, "state evolution: iterations must be >= 1");
  SeParams out;
  // beta_hat_(0) = 0, so sigma_bar^2_(0) = E[B^2] / delta. Encode it as a
  // previous state with infinite threshold: eta(.) = 0 gives MSE = E[B^2].
  SeState prev{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (int t = 0; t < iterations; ++t) {
    const std::optional<double> omega = t == 0 ? std::optional<double>(omega_init) : std::nullopt;
    const SeStep step = se_step(prev, prior, err, spec, delta, omega, alpha, options);
    out.sigma_bar_sq.push_back(step.sigma_sq);
    out.zeta_bar_sq.push_back(step.zeta_sq);
    out.theta_seq.push_back(step.theta);
    out.b_seq.push_back(step.b);
    out.omega_seq.push_back(step.omega);
    prev = {step.sigma_sq, step.zeta_sq, step.theta};
  }
  return out;
}

}  // namespace npamp
