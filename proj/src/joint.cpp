#include "npamp/joint.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <span>

#include "npamp/errors.hpp"
#include "npamp/parallel.hpp"

namespace npamp {

double cov_estimate(const AmpFit& fit1, const AmpFit& fit2) {
  const Eigen::VectorXd g1 = score_vector(fit1);
  const Eigen::VectorXd g2 = score_vector(fit2);
  require(g1.size() == g2.size() && g1.size() > 0, "cov_estimate: residual dimension mismatch");
  return g1.dot(g2) / static_cast<double>(g1.size());
}

Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& sigma, bool* repaired) {
  require(sigma.rows() == sigma.cols(), "psd_repair: matrix must be square");
  if (repaired) *repaired = false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw NumericalError("psd_repair: eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() >= 0.0) return sigma;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(1e-10);
  Eigen::MatrixXd out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  out = 0.5 * (out + out.transpose()).eval();
  if (repaired) *repaired = true;
  return out;
}

JointFit fit_joint(const Dataset& data, const std::vector<ExpectileSpec>& levels,
                   const AmpSettings& settings, bool parallel) {
  validate(data);
  validate(settings);
  require(levels.size() >= 2, "fit_joint: at least two expectile levels are required");
  for (const auto& spec : levels) validate(spec);

  JointFit joint;
  joint.levels = levels;
  joint.fits.resize(levels.size());
  parallel_for(
      levels.size(), [&](std::size_t k) { joint.fits[k] = run_amp(data, levels[k], settings); },
      parallel ? thread_count() : 1u);

  const auto k_count = static_cast<Eigen::Index>(levels.size());
  joint.sigma.resize(k_count, k_count);
  for (Eigen::Index a = 0; a < k_count; ++a) {
    joint.degraded = joint.degraded || !joint.fits[a].converged;
    joint.sigma(a, a) = joint.fits[a].state.zeta_sq;
    for (Eigen::Index b = a + 1; b < k_count; ++b) {
      joint.sigma(a, b) = joint.sigma(b, a) = cov_estimate(joint.fits[a], joint.fits[b]);
    }
  }
  joint.sigma = psd_repair(joint.sigma, &joint.psd_repaired);
  return joint;
}

Eigen::VectorXd pilot_residuals(const Dataset& data, const AmpSettings& settings) {
  const AmpFit pilot = run_amp(data, ExpectileSpec{0.5, 0.0}, settings);
  if (!pilot.converged) throw NumericalError("pilot fit at tau = 0.5 did not converge");
  return data.y - data.x * pilot.state.beta_hat;
}

double estimate_u_tau(const Dataset& data, double tau, const AmpSettings& settings) {
  require(tau > 0.0 && tau < 1.0, "estimate_u_tau: tau must lie in (0, 1)");
  const Eigen::VectorXd r = pilot_residuals(data, settings);
  return sample_expectile(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), tau);
}

}  // namespace npamp
