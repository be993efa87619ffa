#pragma once

#include <Eigen/Dense>
#include <vector>

#include "npamp/amp.hpp"
#include "npamp/dataset.hpp"
#include "npamp/expectile.hpp"

namespace npamp {

/// One AMP fit per expectile level on the same data, plus the cross-level
/// covariance of the debiased estimates.
struct JointFit {
  std::vector<AmpFit> fits;
  Eigen::MatrixXd sigma;  // K x K, entries zeta_(k1,k2)
  std::vector<ExpectileSpec> levels;
  bool degraded = false;  // some level did not converge
  bool psd_repaired = false;
};

/// (1/n) sum_i G_k1(z1_i; b1) G_k2(z2_i; b2), each score evaluated with its
/// own fit's (tau, u, b, delta, omega).
double cov_estimate(const AmpFit& fit1, const AmpFit& fit2);

/// Clips negative eigenvalues of a symmetric matrix at 1e-10 and rebuilds it.
/// Returns the input unchanged when it is already PSD.
Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& sigma, bool* repaired = nullptr);

/// Fits every level (concurrently when `parallel`) and fills the covariance.
JointFit fit_joint(const Dataset& data, const std::vector<ExpectileSpec>& levels,
                   const AmpSettings& settings = {}, bool parallel = true);

/// Residuals y - X beta_hat of a pilot fit at tau = 0.5, u = 0.
Eigen::VectorXd pilot_residuals(const Dataset& data, const AmpSettings& settings = {});

/// Sample tau-expectile of the pilot residuals. Throws NumericalError when
/// the pilot does not converge.
double estimate_u_tau(const Dataset& data, double tau, const AmpSettings& settings = {});

}  // namespace npamp
