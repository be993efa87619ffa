#include "npamp/np_test.hpp"

#include <cmath>

#include "npamp/errors.hpp"
#include "npamp/normal.hpp"

namespace npamp {

namespace {

double contrast_sd(const Eigen::Matrix2d& sigma) {
  const Eigen::Vector2d d(1.0, -1.0);
  const double var = d.dot(sigma * d);
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NumericalError("degenerate contrast: Delta Sigma Delta' = " + std::to_string(var));
  }
  return std::sqrt(var);
}

}  // namespace

TestReport test_statistics(const Eigen::VectorXd& beta_tilde1, const Eigen::VectorXd& beta_tilde2,
                           const Eigen::Matrix2d& sigma, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "test: alpha must lie in (0, 1)");
  require(beta_tilde1.size() == beta_tilde2.size(), "test: debiased estimates differ in length");
  require(sigma.allFinite() && sigma(0, 1) == sigma(1, 0), "test: sigma must be finite and symmetric");
  const double sd = contrast_sd(sigma);

  TestReport report;
  report.alpha = alpha;
  report.sigma = sigma;
  report.t_stats = (beta_tilde1 - beta_tilde2) / sd;
  report.p_values.resize(report.t_stats.size());
  report.rejected.resize(static_cast<std::size_t>(report.t_stats.size()));
  for (Eigen::Index j = 0; j < report.t_stats.size(); ++j) {
    report.p_values[j] = two_sided_p_value(report.t_stats[j]);
    report.rejected[static_cast<std::size_t>(j)] = report.p_values[j] <= alpha;
  }
  return report;
}

TestReport test_statistics(const JointFit& joint, double alpha) {
  require(joint.fits.size() == 2 && joint.sigma.rows() == 2 && joint.sigma.cols() == 2,
          "test: the joint fit must have exactly two levels");
  TestReport report = test_statistics(joint.fits[0].state.beta_tilde, joint.fits[1].state.beta_tilde,
                                      Eigen::Matrix2d(joint.sigma), alpha);
  report.levels = joint.levels;
  report.degraded = joint.degraded;
  return report;
}

double power_function(const std::vector<double>& gammas, double u1, double u2,
                      const Eigen::Matrix2d& sigma, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "power_function: alpha must lie in (0, 1)");
  require(!gammas.empty(), "power_function: gamma values must be nonempty");
  const double a = (u1 - u2) / contrast_sd(sigma);
  const double upper = normal_quantile(1.0 - alpha / 2.0);
  const double lower = normal_quantile(alpha / 2.0);
  double total = 0.0;
  for (double g : gammas) {
    // At g a = 0 the two tails are alpha/2 each; summing the tail masses
    // directly keeps that exact.
    total += normal_sf(upper - g * a) + normal_cdf(lower - g * a);
  }
  return total / static_cast<double>(gammas.size());
}

EmpiricalRates empirical_rates(const Eigen::MatrixXd& p_values, const std::vector<Eigen::Index>& support,
                               double alpha) {
  require(p_values.rows() >= 1, "empirical_rates: at least one replication is required");
  std::vector<bool> in_support(static_cast<std::size_t>(p_values.cols()), false);
  for (Eigen::Index j : support) {
    require(j >= 0 && j < p_values.cols(), "empirical_rates: support index out of range");
    in_support[static_cast<std::size_t>(j)] = true;
  }
  double null_hits = 0.0, null_count = 0.0, alt_hits = 0.0, alt_count = 0.0;
  for (Eigen::Index r = 0; r < p_values.rows(); ++r) {
    for (Eigen::Index j = 0; j < p_values.cols(); ++j) {
      const double hit = p_values(r, j) <= alpha ? 1.0 : 0.0;
      if (in_support[static_cast<std::size_t>(j)]) {
        alt_hits += hit;
        alt_count += 1.0;
      } else {
        null_hits += hit;
        null_count += 1.0;
      }
    }
  }
  EmpiricalRates rates;
  rates.fp = null_count > 0.0 ? null_hits / null_count : 0.0;
  if (alt_count > 0.0) rates.tp = alt_hits / alt_count;
  return rates;
}

}  // namespace npamp
