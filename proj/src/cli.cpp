#include "npamp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>

#include "CLI11.hpp"
#include "npamp/errors.hpp"
#include "npamp/io.hpp"
#include "npamp/joint.hpp"
#include "npamp/np_test.hpp"
#include "npamp/puffer.hpp"
#include "npamp/simulation.hpp"
#include "npamp/state_evolution.hpp"

namespace npamp {

namespace {

struct SolverFlags {
  std::string alpha_grid;
  int max_iter = 200;
  double tol = 1e-6;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha-grid", alpha_grid, "Comma-separated threshold multipliers (default 0.5,0.75,...,3)");
    cmd->add_option("--max-iter", max_iter, "Maximum AMP iterations per multiplier");
    cmd->add_option("--tol", tol, "Relative change tolerance");
  }

  AmpSettings settings() const {
    AmpSettings s;
    if (!alpha_grid.empty()) {
      s.alpha_grid.clear();
      std::stringstream ss(alpha_grid);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          s.alpha_grid.push_back(std::stod(item, &used));
          require(used == item.size(), "");
        } catch (const std::exception&) {
          throw std::invalid_argument("--alpha-grid: not a number: '" + item + "'");
        }
      }
    }
    s.max_iter = max_iter;
    s.tol = tol;
    validate(s);
    return s;
  }
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::invalid_argument("cannot write '" + path + "'");
  f << text;
}

SimConfig resolve_config(const std::string& path_or_preset, const std::string& profile) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), path_or_preset) != names.end()) {
    return preset(path_or_preset, profile.empty() ? Profile::Desk : parse_profile(profile));
  }
  SimConfig cfg = load_config(path_or_preset);
  if (!profile.empty()) apply_profile(cfg, parse_profile(profile));
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-dimensional Newey-Powell heteroscedasticity test via approximate message passing", "npamp"};
  app.require_subcommand(1);

  std::string in_path, out_path;

  auto* fit = app.add_subcommand("fit", "Fit one expectile level and print the AMP state as JSON");
  double fit_tau = 0.5;
  std::optional<double> fit_u;
  SolverFlags fit_solver;
  fit->add_option("--in", in_path, "Dataset CSV (first column y)")->required();
  fit->add_option("--tau", fit_tau, "Expectile level in (0, 1)");
  fit->add_option("--u-tau", fit_u, "Error expectile; estimated from a pilot fit when omitted");
  fit->add_option("--out", out_path, "Report path (default stdout)");
  fit_solver.add(fit);

  auto* test = app.add_subcommand("test", "Two-level heteroscedasticity test, JSON report");
  double tau1 = 0.2, tau2 = 0.8, alpha = 0.05;
  std::string u_source = "pilot";
  std::optional<double> u1, u2;
  bool test_decorrelate = false;
  SolverFlags test_solver;
  test->add_option("--in", in_path, "Dataset CSV (first column y)")->required();
  test->add_option("--tau1", tau1, "First expectile level");
  test->add_option("--tau2", tau2, "Second expectile level");
  test->add_option("--alpha", alpha, "Significance level");
  test->add_option("--u-source", u_source, "pilot or value")->check(CLI::IsMember({"pilot", "value"}));
  test->add_option("--u1", u1, "Error expectile at tau1 (with --u-source value)");
  test->add_option("--u2", u2, "Error expectile at tau2 (with --u-source value)");
  test->add_flag("--decorrelate", test_decorrelate, "Apply the puffer transformation first");
  test->add_option("--out", out_path, "Report path (default stdout)");
  test_solver.add(test);

  auto* simulate = app.add_subcommand("simulate", "Run a simulation scenario, JSON report");
  std::string config, profile, qq_out;
  std::optional<int> replications;
  std::optional<std::uint64_t> design_seed, error_seed;
  unsigned threads = 0;
  bool include_p = false;
  simulate->add_option("--config", config, "Preset name or JSON config path")->required();
  simulate->add_option("--profile", profile, "desk or paper (overrides n, p, R)")
      ->check(CLI::IsMember({"desk", "paper"}));
  simulate->add_option("--replications", replications, "Override the replication count");
  simulate->add_option("--design-seed", design_seed, "Override the design seed");
  simulate->add_option("--error-seed", error_seed, "Override the error seed");
  simulate->add_option("--threads", threads, "Worker threads (default NPAMP_THREADS or all cores)");
  simulate->add_flag("--include-p-values", include_p, "Add the replication x p p-value matrix");
  simulate->add_option("--out", out_path, "Report path (default stdout)");
  simulate->add_option("--qq-out", qq_out, "CSV of QQ pairs for pooled null statistics");

  auto* se = app.add_subcommand("se", "State-evolution trajectory as CSV");
  std::optional<double> se_tau;
  int se_iter = 30;
  SeOptions se_options;
  se->add_option("--config", config, "Preset name or JSON config path")->required();
  se->add_option("--profile", profile, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  se->add_option("--tau", se_tau, "Expectile level (default: first level of the config)");
  se->add_option("--iterations", se_iter, "Recursion steps");
  se->add_option("--mc-samples", se_options.mc_samples, "Monte-Carlo draws per expectation");
  se->add_option("--seed", se_options.seed, "Monte-Carlo seed");
  se->add_option("--out", out_path, "CSV path (default stdout)");

  auto* decorrelate = app.add_subcommand("decorrelate", "Apply the puffer transformation to a dataset");
  decorrelate->add_option("--in", in_path, "Dataset CSV")->required();
  decorrelate->add_option("--out", out_path, "Output CSV (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  try {
    if (*fit) {
      const Dataset data = parse_dataset(in_path);
      const AmpSettings settings = fit_solver.settings();
      ExpectileSpec spec{fit_tau, 0.0};
      validate(ExpectileSpec{fit_tau, 0.0});
      spec.u = fit_u ? *fit_u : estimate_u_tau(data, fit_tau, settings);
      const AmpFit result = run_amp(data, spec, settings);
      if (!result.converged) err << "warning: no threshold multiplier converged\n";
      emit(out_path, fit_report(result, data.names).dump(2) + "\n", out);
    } else if (*test) {
      Dataset data = parse_dataset(in_path);
      const AmpSettings settings = test_solver.settings();
      require(alpha > 0.0 && alpha < 1.0, "--alpha must lie in (0, 1)");
      validate(ExpectileSpec{tau1, 0.0});
      validate(ExpectileSpec{tau2, 0.0});
      if (test_decorrelate) data = puffer_transform(data).first;
      double v1 = 0.0, v2 = 0.0;
      if (u_source == "value") {
        require(u1.has_value() && u2.has_value(), "--u-source value needs --u1 and --u2");
        v1 = *u1;
        v2 = *u2;
      } else {
        require(!u1 && !u2, "--u1/--u2 require --u-source value");
        const Eigen::VectorXd r = pilot_residuals(data, settings);
        const std::span<const double> view(r.data(), static_cast<std::size_t>(r.size()));
        v1 = sample_expectile(view, tau1);
        v2 = sample_expectile(view, tau2);
      }
      const JointFit joint = fit_joint(data, {ExpectileSpec{tau1, v1}, ExpectileSpec{tau2, v2}}, settings);
      if (joint.degraded) err << "warning: at least one level did not converge\n";
      const TestReport report = test_statistics(joint, alpha);
      nlohmann::json j = test_report(report, data.names);
      j["u_source"] = u_source;
      j["decorrelated"] = test_decorrelate;
      emit(out_path, j.dump(2) + "\n", out);
    } else if (*simulate) {
      SimConfig cfg = resolve_config(config, profile);
      if (replications) cfg.replications = *replications;
      if (design_seed) cfg.design_seed = *design_seed;
      if (error_seed) cfg.error_seed = *error_seed;
      validate(cfg);
      const SimResult result = run_simulation(cfg, threads);
      emit(out_path, simulation_report(cfg, result, include_p).dump(2) + "\n", out);
      if (!qq_out.empty()) {
        std::ofstream f(qq_out);
        if (!f) throw std::invalid_argument("cannot write '" + qq_out + "'");
        write_qq_csv(f, qq_export(result.null_t));
      }
    } else if (*se) {
      const SimConfig cfg = resolve_config(config, profile);
      const double tau = se_tau.value_or(cfg.levels.first);
      validate(ExpectileSpec{tau, 0.0});
      const SeRun run = run_config_state_evolution(cfg, tau, se_iter, se_options);
      std::ostringstream csv;
      write_se_csv(csv, run.params);
      emit(out_path, csv.str(), out);
    } else if (*decorrelate) {
      const Dataset data = parse_dataset(in_path);
      const Dataset transformed = puffer_transform(data).first;
      std::ostringstream csv;
      write_dataset(csv, transformed);
      emit(out_path, csv.str(), out);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace npamp
