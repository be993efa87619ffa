#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "npamp/amp.hpp"
#include "npamp/dataset.hpp"
#include "npamp/distribution.hpp"
#include "npamp/state_evolution.hpp"

namespace npamp {

struct SimConfig {
  std::string name = "custom";
  int n = 100;
  int p = 200;
  int s = 5;
  double beta_scale = 3.0;  // nonzero beta0 entries are beta_scale * N(0, 1)
  std::vector<double> gamma_pattern{3.0, 1.0, -5.0, -5.0, -3.0};
  ErrorDistribution error{NormalLaw{}, 0.5};
  bool heteroscedastic = false;
  int replications = 100;
  std::uint64_t design_seed = 1;
  std::uint64_t error_seed = 1000;
  std::pair<double, double> levels{0.2, 0.8};
  double alpha = 0.05;
  bool use_true_u = true;
  std::optional<double> ar_rho;  // AR(1) design correlation
  bool decorrelate = false;
  bool gamma_overlap = false;  // place gamma0 on the first entries of beta0's support
  AmpSettings amp;
};

void validate(const SimConfig& cfg);

/// Quantities held fixed across replications.
struct ScenarioDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd beta0;
  Eigen::VectorXd gamma0;  // zero unless heteroscedastic
  std::vector<Eigen::Index> beta_support;
  std::vector<Eigen::Index> gamma_support;  // empty unless heteroscedastic
};

struct Scenario {
  Dataset data;
  Eigen::VectorXd beta0;
  Eigen::VectorXd gamma0;
  Eigen::VectorXd errors;
  std::vector<Eigen::Index> gamma_support;
};

/// Design, beta0 and gamma0 drawn from the design seed.
ScenarioDesign make_design(const SimConfig& cfg);

/// Errors for replication r drawn from seed_seq{error_seed, r}; the response
/// is X beta0 + (1 + X gamma0) * eps, or X beta0 + eps when homoscedastic.
Scenario draw_replication(const SimConfig& cfg, const ScenarioDesign& design, int replication);

Scenario generate_scenario(const SimConfig& cfg, int replication);

struct ReplicationRecord {
  int replication = 0;
  double u1 = 0.0;
  double u2 = 0.0;
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
  // (1/p) sum_j (bt1_j - b1_j)(bt2_j - b2_j) with b_k = beta0 + u_k gamma0
  // at the true error expectiles.
  double cross_moment = 0.0;
  double sq_error1 = 0.0;
  double sq_error2 = 0.0;
  bool degraded = false;
};

struct SimResult {
  std::string name;
  double fp = 0.0;
  std::optional<double> tp;
  Eigen::MatrixXd p_values;  // successful replications x p
  Eigen::MatrixXd t_stats;   // successful replications x p
  std::vector<double> null_t;  // pooled T_j over null coordinates
  Eigen::VectorXd rejection_rate;  // per coordinate
  std::vector<Eigen::Index> gamma_support;
  std::vector<ReplicationRecord> records;
  std::vector<std::pair<int, std::string>> failures;
  int degraded = 0;
  double true_u1 = 0.0;
  double true_u2 = 0.0;
  double elapsed_seconds = 0.0;  // not part of any report
};

/// Runs every replication through the full pipeline. Replications run
/// concurrently; results are assembled in replication order. Failed
/// replications are dropped when they are fewer than 5% of R, otherwise
/// NumericalError is thrown.
SimResult run_simulation(const SimConfig& cfg, unsigned threads = 0);

/// Pairs (Phi^-1((i - 0.5)/m), i-th smallest sample value).
std::vector<std::pair<double, double>> qq_export(std::vector<double> t_stats);

enum class Profile { Desk, Paper };

Profile parse_profile(const std::string& name);
void apply_profile(SimConfig& cfg, Profile profile);

std::vector<std::string> preset_names();
/// Throws std::invalid_argument for unknown names.
SimConfig preset(const std::string& name, Profile profile = Profile::Desk);

struct SeRun {
  SeParams params;
  double alpha = 0.0;
  double tau = 0.0;
  double u = 0.0;
};

/// State evolution for one level of a scenario: the empirical prior of
/// beta0 + u gamma0 and the scenario's error law. Runs every alpha of the
/// grid and keeps the one with the smallest final zeta_bar^2.
SeRun run_config_state_evolution(const SimConfig& cfg, double tau, int iterations,
                                 const SeOptions& options = {});

}  // namespace npamp
