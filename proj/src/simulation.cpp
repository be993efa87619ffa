#include "npamp/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <span>

#include "npamp/errors.hpp"
#include "npamp/joint.hpp"
#include "npamp/normal.hpp"
#include "npamp/np_test.hpp"
#include "npamp/parallel.hpp"
#include "npamp/puffer.hpp"

namespace npamp {

namespace {

Rng seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

constexpr std::uint64_t kDesignStream = 0xd35160ULL;

// First `count` entries of a uniformly random permutation of `pool`.
std::vector<Eigen::Index> draw_subset(std::vector<Eigen::Index> pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void validate(const SimConfig& cfg) {
  require(cfg.n >= 2 && cfg.p >= 1, "config: n must be >= 2 and p >= 1");
  require(cfg.n <= cfg.p, "config: n must not exceed p");
  require(cfg.s >= 0 && cfg.s <= cfg.p, "config: s must lie in [0, p]");
  require(cfg.replications >= 1, "config: replications must be >= 1");
  require(std::isfinite(cfg.beta_scale), "config: beta_scale must be finite");
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "config: alpha must lie in (0, 1)");
  require(cfg.levels.first > 0.0 && cfg.levels.first < 1.0 && cfg.levels.second > 0.0 &&
              cfg.levels.second < 1.0,
          "config: levels must lie in (0, 1)");
  require(cfg.levels.first != cfg.levels.second, "config: the two levels must differ");
  if (cfg.ar_rho) require(std::abs(*cfg.ar_rho) < 1.0, "config: ar_rho must lie in (-1, 1)");
  if (cfg.heteroscedastic) {
    const auto g = static_cast<int>(cfg.gamma_pattern.size());
    require(g >= 1, "config: gamma_pattern must be nonempty when heteroscedastic");
    if (cfg.gamma_overlap) {
      require(g <= cfg.s, "config: overlapping gamma support needs s >= gamma_pattern length");
    } else {
      require(cfg.s + g <= cfg.p, "config: disjoint gamma support needs s + gamma_pattern length <= p");
    }
  }
  validate(cfg.amp);
}

ScenarioDesign make_design(const SimConfig& cfg) {
  validate(cfg);
  Rng rng = seeded(cfg.design_seed, kDesignStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index n = cfg.n, p = cfg.p;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  ScenarioDesign design;
  design.x.resize(n, p);
  if (cfg.ar_rho) {
    const double rho = *cfg.ar_rho;
    const double innov = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index i = 0; i < n; ++i) {
      double prev = gauss(rng);
      design.x(i, 0) = prev;
      for (Eigen::Index j = 1; j < p; ++j) {
        prev = rho * prev + innov * gauss(rng);
        design.x(i, j) = prev;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) design.x(i, j) = gauss(rng);
  }
  design.x *= scale;

  std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  design.beta_support = draw_subset(all, static_cast<std::size_t>(cfg.s), rng);
  design.beta0 = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j : design.beta_support) design.beta0[j] = cfg.beta_scale * gauss(rng);

  design.gamma0 = Eigen::VectorXd::Zero(p);
  if (cfg.heteroscedastic) {
    const std::size_t g = cfg.gamma_pattern.size();
    if (cfg.gamma_overlap) {
      design.gamma_support.assign(design.beta_support.begin(), design.beta_support.begin() + g);
    } else {
      std::vector<Eigen::Index> rest;
      std::set_difference(all.begin(), all.end(), design.beta_support.begin(), design.beta_support.end(),
                          std::back_inserter(rest));
      design.gamma_support = draw_subset(rest, g, rng);
    }
    for (std::size_t k = 0; k < g; ++k) design.gamma0[design.gamma_support[k]] = cfg.gamma_pattern[k];
  }
  return design;
}

Scenario draw_replication(const SimConfig& cfg, const ScenarioDesign& design, int replication) {
  require(replication >= 0, "replication index must be >= 0");
  Rng rng = seeded(cfg.error_seed, static_cast<std::uint64_t>(replication));
  Scenario sc;
  sc.beta0 = design.beta0;
  sc.gamma0 = design.gamma0;
  sc.gamma_support = design.gamma_support;
  sc.errors.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i) sc.errors[i] = cfg.error.sample(rng);
  sc.data.x = design.x;
  sc.data.y = design.x * design.beta0;
  if (cfg.heteroscedastic) {
    const Eigen::VectorXd spread = Eigen::VectorXd::Ones(cfg.n) + design.x * design.gamma0;
    sc.data.y += spread.cwiseProduct(sc.errors);
  } else {
    sc.data.y += sc.errors;
  }
  return sc;
}

Scenario generate_scenario(const SimConfig& cfg, int replication) {
  return draw_replication(cfg, make_design(cfg), replication);
}

namespace {

struct ReplicationOutcome {
  bool ok = false;
  std::string failure;
  ReplicationRecord record;
  Eigen::VectorXd t;
  Eigen::VectorXd p;
};

ReplicationOutcome run_replication(const SimConfig& cfg, const ScenarioDesign& design, int r,
                                   double true_u1, double true_u2) {
  ReplicationOutcome out;
  try {
    const Scenario sc = draw_replication(cfg, design, r);
    Dataset data = sc.data;
    if (cfg.decorrelate) data = puffer_transform(data).first;

    double u1 = true_u1, u2 = true_u2;
    if (!cfg.use_true_u) {
      const Eigen::VectorXd res = pilot_residuals(data, cfg.amp);
      const std::span<const double> view(res.data(), static_cast<std::size_t>(res.size()));
      u1 = sample_expectile(view, cfg.levels.first);
      u2 = sample_expectile(view, cfg.levels.second);
    }
    const JointFit joint =
        fit_joint(data, {ExpectileSpec{cfg.levels.first, u1}, ExpectileSpec{cfg.levels.second, u2}}, cfg.amp,
                  false);
    const TestReport report = test_statistics(joint, cfg.alpha);

    const Eigen::VectorXd b1 = sc.beta0 + true_u1 * sc.gamma0;
    const Eigen::VectorXd b2 = sc.beta0 + true_u2 * sc.gamma0;
    const Eigen::VectorXd e1 = joint.fits[0].state.beta_tilde - b1;
    const Eigen::VectorXd e2 = joint.fits[1].state.beta_tilde - b2;
    const double p = static_cast<double>(cfg.p);

    out.record.replication = r;
    out.record.u1 = u1;
    out.record.u2 = u2;
    out.record.sigma = report.sigma;
    out.record.cross_moment = e1.dot(e2) / p;
    out.record.sq_error1 = e1.squaredNorm() / p;
    out.record.sq_error2 = e2.squaredNorm() / p;
    out.record.degraded = joint.degraded;
    out.t = report.t_stats;
    out.p = report.p_values;
    out.ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

SimResult run_simulation(const SimConfig& cfg, unsigned threads) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioDesign design = make_design(cfg);
  const double true_u1 = distribution_expectile(cfg.error, cfg.levels.first);
  const double true_u2 = distribution_expectile(cfg.error, cfg.levels.second);

  std::vector<ReplicationOutcome> outcomes(static_cast<std::size_t>(cfg.replications));
  parallel_for(
      outcomes.size(),
      [&](std::size_t r) { outcomes[r] = run_replication(cfg, design, static_cast<int>(r), true_u1, true_u2); },
      threads == 0 ? thread_count() : threads);

  SimResult result;
  result.name = cfg.name;
  result.true_u1 = true_u1;
  result.true_u2 = true_u2;
  result.gamma_support = design.gamma_support;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (!outcomes[r].ok) result.failures.emplace_back(static_cast<int>(r), outcomes[r].failure);
  }
  if (!result.failures.empty()) {
    if (static_cast<double>(result.failures.size()) >= 0.05 * cfg.replications) {
      throw NumericalError("simulation '" + cfg.name + "': " + std::to_string(result.failures.size()) + " of " +
                           std::to_string(cfg.replications) +
                           " replications failed; first failure: " + result.failures.front().second);
    }
    std::cerr << "warning: simulation '" << cfg.name << "' excluded " << result.failures.size()
              << " failed replication(s)\n";
  }

  const Eigen::Index ok = cfg.replications - static_cast<Eigen::Index>(result.failures.size());
  result.p_values.resize(ok, cfg.p);
  result.t_stats.resize(ok, cfg.p);
  std::vector<bool> in_gamma(static_cast<std::size_t>(cfg.p), false);
  for (Eigen::Index j : design.gamma_support) in_gamma[static_cast<std::size_t>(j)] = true;
  Eigen::Index row = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    result.p_values.row(row) = o.p.transpose();
    result.t_stats.row(row) = o.t.transpose();
    for (Eigen::Index j = 0; j < cfg.p; ++j) {
      if (!in_gamma[static_cast<std::size_t>(j)]) result.null_t.push_back(o.t[j]);
    }
    result.records.push_back(o.record);
    if (o.record.degraded) ++result.degraded;
    ++row;
  }
  if (result.degraded > 0) {
    std::cerr << "warning: simulation '" << cfg.name << "' has " << result.degraded
              << " replication(s) with a non-converged fit\n";
  }

  const EmpiricalRates rates = empirical_rates(result.p_values, design.gamma_support, cfg.alpha);
  result.fp = rates.fp;
  result.tp = rates.tp;
  result.rejection_rate.resize(cfg.p);
  for (Eigen::Index j = 0; j < cfg.p; ++j) {
    result.rejection_rate[j] = (result.p_values.col(j).array() <= cfg.alpha).cast<double>().mean();
  }
  result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<std::pair<double, double>> qq_export(std::vector<double> t_stats) {
  require(!t_stats.empty(), "qq_export: sample must be nonempty");
  std::sort(t_stats.begin(), t_stats.end());
  const double m = static_cast<double>(t_stats.size());
  std::vector<std::pair<double, double>> out(t_stats.size());
  for (std::size_t i = 0; i < t_stats.size(); ++i) {
    out[i] = {normal_quantile((static_cast<double>(i) + 0.5) / m), t_stats[i]};
  }
  return out;
}

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper") return Profile::Paper;
  throw std::invalid_argument("unknown profile '" + name + "' (expected desk or paper)");
}

void apply_profile(SimConfig& cfg, Profile profile) {
  if (profile == Profile::Desk) {
    cfg.n = 100;
    cfg.p = 200;
    cfg.replications = 100;
  } else {
    cfg.n = 250;
    cfg.p = 500;
    cfg.replications = 400;
  }
}

namespace {

struct PresetSpec {
  const char* name;
  ErrorDistribution error;
  bool heteroscedastic;
  std::pair<double, double> levels;
  std::optional<double> ar_rho;
  bool medium_sparsity;
};

ErrorDistribution scaled(ErrorDistribution::Kind kind) { return ErrorDistribution(std::move(kind), 0.5); }

std::vector<PresetSpec> preset_table() {
  const ErrorDistribution normal = scaled(NormalLaw{});
  const ErrorDistribution t3 = scaled(StudentTLaw{3.0});
  const ErrorDistribution laplace = scaled(LaplaceLaw{0.0, 1.0});
  const ErrorDistribution mix1(MixtureNormalLaw{{0.9, 0.1}, {-0.2, 1.8}, {0.25, 0.01}});
  const ErrorDistribution mix2(MixtureNormalLaw{{0.9, 0.1}, {0.2, -1.8}, {0.25, 0.01}});
  const ErrorDistribution mix3(MixtureNormalLaw{{0.95, 0.05}, {0.0, 0.0}, {0.25, 4.0}});
  const std::pair<double, double> lo{0.2, 0.8}, hi{0.6, 0.8};
  return {
      {"null_normal", normal, false, lo, std::nullopt, false},
      {"null_t3", t3, false, lo, std::nullopt, false},
      {"null_laplace", laplace, false, lo, std::nullopt, false},
      {"null_mix1", mix1, false, lo, std::nullopt, false},
      {"null_mix2", mix2, false, lo, std::nullopt, false},
      {"null_mix3", mix3, false, lo, std::nullopt, false},
      {"high_sparsity", normal, false, lo, std::nullopt, false},
      {"medium_sparsity", normal, false, lo, std::nullopt, true},
      {"hetero_normal", normal, true, lo, std::nullopt, false},
      {"hetero_normal_06", normal, true, hi, std::nullopt, false},
      {"hetero_t3", t3, true, lo, std::nullopt, false},
      {"hetero_laplace", laplace, true, lo, std::nullopt, false},
      {"hetero_mix1", mix1, true, lo, std::nullopt, false},
      {"hetero_medium", normal, true, lo, std::nullopt, true},
      {"ar03_null", normal, false, lo, 0.3, false},
      {"ar03_hetero", normal, true, lo, 0.3, false},
      {"ar07_null", normal, false, lo, 0.7, false},
      {"ar07_hetero", normal, true, lo, 0.7, false},
  };
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& spec : preset_table()) names.emplace_back(spec.name);
  return names;
}

SimConfig preset(const std::string& name, Profile profile) {
  for (const auto& spec : preset_table()) {
    if (name != spec.name) continue;
    SimConfig cfg;
    cfg.name = spec.name;
    cfg.error = spec.error;
    cfg.heteroscedastic = spec.heteroscedastic;
    cfg.levels = spec.levels;
    cfg.ar_rho = spec.ar_rho;
    cfg.decorrelate = spec.ar_rho.has_value();
    apply_profile(cfg, profile);
    // medium sparsity keeps s/p = 0.1
    cfg.s = spec.medium_sparsity ? cfg.p / 10 : 5;
    return cfg;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

SeRun run_config_state_evolution(const SimConfig& cfg, double tau, int iterations, const SeOptions& options) {
  const ScenarioDesign design = make_design(cfg);
  const double u = distribution_expectile(cfg.error, tau);
  const Eigen::VectorXd b = design.beta0 + u * design.gamma0;
  const SignalPrior prior = SignalPrior::empirical(std::vector<double>(b.data(), b.data() + b.size()));
  const double delta = static_cast<double>(cfg.n) / static_cast<double>(cfg.p);
  const double omega_init =
      cfg.amp.omega_init.value_or(std::max(std::floor(0.05 * cfg.p), 1.0) / static_cast<double>(cfg.p));
  const ExpectileSpec spec{tau, u};

  std::optional<SeRun> best;
  std::string last_failure;
  for (double alpha : cfg.amp.alpha_grid) {
    try {
      SeRun run{run_state_evolution(prior, cfg.error, spec, delta, alpha, iterations, omega_init, options), alpha,
                tau, u};
      if (!best || run.params.zeta_bar_sq.back() < best->params.zeta_bar_sq.back()) best = std::move(run);
    } catch (const NumericalError& e) {
      last_failure = e.what();
    }
  }
  if (!best) throw NumericalError("state evolution failed for every alpha: " + last_failure);
  return *best;
}

}  // namespace npamp
