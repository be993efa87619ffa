#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "npamp/distribution.hpp"
#include "npamp/expectile.hpp"

namespace npamp {

/// Limiting law of the coordinates of beta: zero with probability
/// 1 - nonzero_prob, otherwise a draw from a Gaussian slab or a finite atom
/// set. An empirical prior puts mass 1/p on each entry of a coefficient
/// vector, which is how B_k = B_0 + u_k Gamma_0 is represented.
class SignalPrior {
 public:
  static SignalPrior gaussian_slab(double nonzero_prob, double slab_sd);
  static SignalPrior atoms(double nonzero_prob, std::vector<double> values);
  static SignalPrior empirical(std::vector<double> coefficients);
  static SignalPrior shifted(const std::vector<double>& beta0, const std::vector<double>& gamma0,
                             double u);

  double sample(Rng& rng) const;
  double second_moment() const;
  double nonzero_prob() const { return nonzero_prob_; }

 private:
  enum class Kind { GaussianSlab, Atoms, Empirical };
  Kind kind_ = Kind::GaussianSlab;
  double nonzero_prob_ = 0.0;
  double slab_sd_ = 0.0;
  std::vector<double> values_;
};

/// (sigma_bar^2, zeta_bar^2, theta) at one step of the recursion.
struct SeState {
  double sigma_sq = 0.0;
  double zeta_sq = 0.0;
  double theta = 0.0;
};

struct SeStep {
  double sigma_sq = 0.0;
  double zeta_sq = 0.0;
  double theta = 0.0;
  double b = 0.0;
  double omega = 0.0;  // sparsity ratio used in the score rescaling
  double nonzero_fraction = 0.0;  // P(eta(B + zeta Z; theta) != 0) at the previous state
};

struct SeOptions {
  int mc_samples = 100000;
  std::uint64_t seed = 20240607;
};

/// Trajectory of the recursion; all sequences share one length.
struct SeParams {
  std::vector<double> sigma_bar_sq;
  std::vector<double> zeta_bar_sq;
  std::vector<double> theta_seq;
  std::vector<double> b_seq;
  std::vector<double> omega_seq;
};

/// Monte-Carlo estimate of E[(eta(B + zeta Z; theta) - B)^2].
double amse(const SignalPrior& prior, double zeta, double theta, const SeOptions& options = {});

/// One step: sigma^2 = E[(eta(B + zeta_prev Z; theta_prev) - B)^2] / delta,
/// b solves E[d/dz G(eps + sigma Z; b)] = 1, zeta^2 = E[G(eps + sigma Z; b)^2]
/// and theta = alpha zeta. When `omega` is empty the sparsity ratio tracks
/// the nonzero fraction of the thresholded estimate, mirroring the solver.
/// Draws are regenerated from `options.seed`, so equal inputs give
/// bit-identical outputs.
SeStep se_step(const SeState& prev, const SignalPrior& prior, const ErrorDistribution& err,
               const ExpectileSpec& spec, double delta, std::optional<double> omega, double alpha,
               const SeOptions& options = {});

/// Starts from sigma_bar^2_(0) = E[B^2] / delta and runs `iterations` steps.
/// Step 0 uses `omega_init`; later steps track the nonzero fraction.
SeParams run_state_evolution(const SignalPrior& prior, const ErrorDistribution& err,
                             const ExpectileSpec& spec, double delta, double alpha, int iterations,
                             double omega_init, const SeOptions& options = {});

}  // namespace npamp
