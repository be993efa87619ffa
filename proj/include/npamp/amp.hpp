#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "npamp/dataset.hpp"
#include "npamp/expectile.hpp"

namespace npamp {

/// The threshold-multiplier grid {0.5, 0.75, ..., 3.0}.
std::vector<double> default_alpha_grid();

struct AmpSettings {
  std::vector<double> alpha_grid = default_alpha_grid();
  int max_iter = 200;
  double tol = 1e-6;
  // Sparsity ratio used before any support is available. Defaults to
  // max(floor(0.05 p), 1) / p.
  std::optional<double> omega_init;
};

void validate(const AmpSettings& settings);

/// State after iteration t of the three-step recursion.
///
/// Iteration t consumes beta_hat_(t) and produces z_(t), b_(t), zeta_(t),
/// theta_(t), beta_tilde_(t) and the next regularized estimate
/// beta_hat_(t+1), which is what `beta_hat` holds. The initial state
/// (t = -1) carries beta_hat_(0) = 0 and no residual history.
struct AmpState {
  int t = -1;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd beta_tilde;
  Eigen::VectorXd z;
  double b = 0.0;
  double theta = 0.0;
  double zeta_sq = 0.0;   // (1/n) sum_i G(z_i; b)^2
  double zeta_emp = 0.0;  // sqrt(zeta_sq)
  double omega = 0.0;     // sparsity ratio used to rescale G at this iteration
  Eigen::Index support_size = 0;  // nonzeros of beta_hat

  bool has_history() const { return t >= 0; }
  static AmpState initial(Eigen::Index p);
};

struct AlphaTrial {
  double alpha = 0.0;
  bool converged = false;
  int iterations = 0;
  double zeta_emp = 0.0;
  std::string failure;  // empty unless the run aborted
};

struct AmpFit {
  AmpState state;
  bool converged = false;
  int iterations = 0;
  double alpha = 0.0;
  double delta = 0.0;  // n / p
  double omega = 0.0;  // sparsity ratio of the final rescaling
  ExpectileSpec spec;
  std::vector<AlphaTrial> trials;
};

/// Componentwise rescaled effective score G(z; b) = (delta/omega) G~(z; b).
Eigen::VectorXd score_vector(const Eigen::VectorXd& z, double b, const ExpectileSpec& spec,
                             double delta, double omega);

/// Score vector of a fitted state, using the state's own b and omega.
Eigen::VectorXd score_vector(const AmpFit& fit);

/// Step 1: z = y - X beta_hat + G(z_prev; b_prev) * k / n, where k is the
/// support size of beta_hat (the nonzero count of the previous threshold
/// step). The correction is absent for the initial state.
Eigen::VectorXd adjust_residuals(const Dataset& data, const AmpState& state,
                                 const ExpectileSpec& spec, double delta);

/// Step 2: the b > 0 at which the average effective-score slope equals s/n,
///   s/n = c(1-tau) #{z <= u}/n + c(tau) #{z > u}/n,  c(w) = 2bw/(2bw + 1).
/// Bisection on [1e-8, 1e8]. Requires 0 < s < n; throws NumericalError
/// when s >= n.
double update_b(const Eigen::VectorXd& z, Eigen::Index support_size, const ExpectileSpec& spec);

/// One pass of steps 1-3 with a fixed sparsity ratio omega and threshold
/// multiplier alpha.
AmpState amp_iterate(const Dataset& data, const AmpState& state, const ExpectileSpec& spec,
                     double delta, double omega, double alpha);

/// Iterates from beta_hat = 0 at a single alpha until the relative l2 change
/// of beta_hat drops below tol, or max_iter is reached.
AmpFit run_amp_fixed_alpha(const Dataset& data, const ExpectileSpec& spec, double alpha,
                           const AmpSettings& settings = {});

/// Runs every alpha on the grid and keeps the converged fit with the
/// smallest zeta_emp. If none converged, the best finished fit is returned
/// with converged = false. Throws NumericalError if every alpha aborted.
AmpFit run_amp(const Dataset& data, const ExpectileSpec& spec, const AmpSettings& settings = {});

}  // namespace npamp
