#include "npamp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "npamp/errors.hpp"

namespace npamp {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string where(const std::string& source, std::size_t row, std::size_t col, const std::string& name) {
  return source + ": row " + std::to_string(row) + ", column " + std::to_string(col) + " ('" + name + "')";
}

}  // namespace

Dataset parse_dataset(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(source + ": empty file");
  const std::vector<std::string> header = split(line);
  if (header.empty() || header[0] != "y") {
    throw std::invalid_argument(source + ": first header column must be 'y'");
  }
  if (header.size() < 2) throw std::invalid_argument(source + ": no predictor columns");

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(source + ": row " + std::to_string(row_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (cell.empty()) throw std::invalid_argument(where(source, row_no, c + 1, header[c]) + ": empty cell");
      const char* first = cell.data() + (cell[0] == '+' ? 1 : 0);
      const auto res = std::from_chars(first, cell.data() + cell.size(), values[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw std::invalid_argument(where(source, row_no, c + 1, header[c]) + ": not a number: '" + cell + "'");
      }
      if (!std::isfinite(values[c])) {
        throw std::invalid_argument(where(source, row_no, c + 1, header[c]) + ": non-finite value");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.size() < 2) throw std::invalid_argument(source + ": at least two data rows are required");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  data.y.resize(n);
  data.x.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y[i] = rows[i][0];
    for (Eigen::Index j = 0; j < p; ++j) data.x(i, j) = rows[i][j + 1];
  }
  data.names.assign(header.begin() + 1, header.end());
  validate(data);
  return data;
}

Dataset parse_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset '" + path + "'");
  return parse_dataset(in, path);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  validate(data);
  out << "y";
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    out << ',' << (data.names.empty() ? "x" + std::to_string(j + 1) : data.names[j]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << format_double(data.x(i, j));
    out << '\n';
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write dataset '" + path + "'");
  write_dataset(out, data);
}

namespace {

template <typename T>
json to_array(const T& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_array(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  require(j.is_object(), what + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    require(known, what + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const ErrorDistribution& dist) {
  json j;
  std::visit(
      [&](const auto& law) {
        using L = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<L, NormalLaw>) {
          j = {{"kind", "normal"}, {"mean", law.mean}, {"sd", law.sd}};
        } else if constexpr (std::is_same_v<L, StudentTLaw>) {
          j = {{"kind", "student_t"}, {"dof", law.dof}};
        } else if constexpr (std::is_same_v<L, LaplaceLaw>) {
          j = {{"kind", "laplace"}, {"location", law.location}, {"scale", law.scale}};
        } else if constexpr (std::is_same_v<L, MixtureNormalLaw>) {
          j = {{"kind", "mixture_normal"}, {"weights", law.weights}, {"means", law.means}, {"variances", law.variances}};
        } else {
          j = {{"kind", "empirical"}, {"samples", law.samples}};
        }
      },
      dist.kind());
  j["post_scale_sd"] = dist.post_scale_sd() ? json(*dist.post_scale_sd()) : json(nullptr);
  return j;
}

ErrorDistribution error_from_json(const json& j) {
  require(j.is_object() && j.contains("kind") && j.at("kind").is_string(), "config: error needs a string 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  std::optional<double> post;
  if (j.contains("post_scale_sd") && !j.at("post_scale_sd").is_null()) post = j.at("post_scale_sd").get<double>();
  if (kind == "normal") {
    check_keys(j, {"kind", "mean", "sd", "post_scale_sd"}, "config.error");
    NormalLaw law;
    read(j, "mean", law.mean);
    read(j, "sd", law.sd);
    return ErrorDistribution(law, post);
  }
  if (kind == "student_t") {
    check_keys(j, {"kind", "dof", "post_scale_sd"}, "config.error");
    StudentTLaw law;
    read(j, "dof", law.dof);
    return ErrorDistribution(law, post);
  }
  if (kind == "laplace") {
    check_keys(j, {"kind", "location", "scale", "post_scale_sd"}, "config.error");
    LaplaceLaw law;
    read(j, "location", law.location);
    read(j, "scale", law.scale);
    return ErrorDistribution(law, post);
  }
  if (kind == "mixture_normal") {
    check_keys(j, {"kind", "weights", "means", "variances", "post_scale_sd"}, "config.error");
    MixtureNormalLaw law;
    read(j, "weights", law.weights);
    read(j, "means", law.means);
    read(j, "variances", law.variances);
    return ErrorDistribution(law, post);
  }
  if (kind == "empirical") {
    check_keys(j, {"kind", "samples", "post_scale_sd"}, "config.error");
    EmpiricalLaw law;
    read(j, "samples", law.samples);
    return ErrorDistribution(law, post);
  }
  throw std::invalid_argument("config: unknown error kind '" + kind + "'");
}

json to_json(const SimConfig& cfg) {
  json amp = {{"alpha_grid", cfg.amp.alpha_grid},
              {"max_iter", cfg.amp.max_iter},
              {"tol", cfg.amp.tol},
              {"omega_init", cfg.amp.omega_init ? json(*cfg.amp.omega_init) : json(nullptr)}};
  return {{"schema_version", kSchemaVersion},
          {"name", cfg.name},
          {"n", cfg.n},
          {"p", cfg.p},
          {"s", cfg.s},
          {"beta_scale", cfg.beta_scale},
          {"gamma_pattern", cfg.gamma_pattern},
          {"error", to_json(cfg.error)},
          {"heteroscedastic", cfg.heteroscedastic},
          {"replications", cfg.replications},
          {"design_seed", cfg.design_seed},
          {"error_seed", cfg.error_seed},
          {"levels", {cfg.levels.first, cfg.levels.second}},
          {"alpha", cfg.alpha},
          {"use_true_u", cfg.use_true_u},
          {"ar_rho", cfg.ar_rho ? json(*cfg.ar_rho) : json(nullptr)},
          {"decorrelate", cfg.decorrelate},
          {"gamma_overlap", cfg.gamma_overlap},
          {"amp", amp}};
}

SimConfig config_from_json(const json& j) {
  check_keys(j,
             {"schema_version", "name", "n", "p", "s", "beta_scale", "gamma_pattern", "error", "heteroscedastic",
              "replications", "design_seed", "error_seed", "levels", "alpha", "use_true_u", "ar_rho", "decorrelate",
              "gamma_overlap", "amp"},
             "config");
  require(j.contains("schema_version"), "config: missing schema_version");
  require(j.at("schema_version") == kSchemaVersion,
          "config: unsupported schema_version " + j.at("schema_version").dump());
  SimConfig cfg;
  read(j, "name", cfg.name);
  read(j, "n", cfg.n);
  read(j, "p", cfg.p);
  read(j, "s", cfg.s);
  read(j, "beta_scale", cfg.beta_scale);
  read(j, "gamma_pattern", cfg.gamma_pattern);
  if (j.contains("error")) cfg.error = error_from_json(j.at("error"));
  read(j, "heteroscedastic", cfg.heteroscedastic);
  read(j, "replications", cfg.replications);
  read(j, "design_seed", cfg.design_seed);
  read(j, "error_seed", cfg.error_seed);
  if (j.contains("levels")) {
    std::vector<double> levels;
    read(j, "levels", levels);
    require(levels.size() == 2, "config: levels must hold exactly two values");
    cfg.levels = {levels[0], levels[1]};
  }
  read(j, "alpha", cfg.alpha);
  read(j, "use_true_u", cfg.use_true_u);
  if (j.contains("ar_rho") && !j.at("ar_rho").is_null()) cfg.ar_rho = j.at("ar_rho").get<double>();
  read(j, "decorrelate", cfg.decorrelate);
  read(j, "gamma_overlap", cfg.gamma_overlap);
  if (j.contains("amp")) {
    const json& a = j.at("amp");
    check_keys(a, {"alpha_grid", "max_iter", "tol", "omega_init"}, "config.amp");
    read(a, "alpha_grid", cfg.amp.alpha_grid);
    read(a, "max_iter", cfg.amp.max_iter);
    read(a, "tol", cfg.amp.tol);
    if (a.contains("omega_init") && !a.at("omega_init").is_null()) cfg.amp.omega_init = a.at("omega_init").get<double>();
  }
  validate(cfg);
  return cfg;
}

SimConfig load_config(const std::string& path_or_preset) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), path_or_preset) != names.end()) return preset(path_or_preset);
  std::ifstream in(path_or_preset);
  if (!in) throw std::invalid_argument("'" + path_or_preset + "' is neither a preset nor a readable config file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config '" + path_or_preset + "': " + e.what());
  }
  return config_from_json(j);
}

json fit_report(const AmpFit& fit, const std::vector<std::string>& names) {
  json trials = json::array();
  for (const auto& t : fit.trials) {
    trials.push_back({{"alpha", t.alpha},
                      {"converged", t.converged},
                      {"iterations", t.iterations},
                      {"zeta_emp", t.zeta_emp},
                      {"failure", t.failure}});
  }
  return {{"schema_version", kSchemaVersion},
          {"command", "fit"},
          {"tau", fit.spec.tau},
          {"u", fit.spec.u},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"alpha", fit.alpha},
          {"delta", fit.delta},
          {"omega", fit.omega},
          {"b", fit.state.b},
          {"theta", fit.state.theta},
          {"zeta_emp", fit.state.zeta_emp},
          {"support_size", fit.state.support_size},
          {"names", names},
          {"beta_hat", to_array(fit.state.beta_hat)},
          {"beta_tilde", to_array(fit.state.beta_tilde)},
          {"trials", trials}};
}

json test_report(const TestReport& report, const std::vector<std::string>& names) {
  json levels = json::array();
  for (const auto& l : report.levels) levels.push_back({{"tau", l.tau}, {"u", l.u}});
  json reject = json::array();
  for (bool r : report.rejected) reject.push_back(r);
  return {{"schema_version", kSchemaVersion},
          {"command", "test"},
          {"levels", levels},
          {"alpha", report.alpha},
          {"delta", to_array(report.delta_vec)},
          {"sigma", matrix_json(report.sigma)},
          {"degraded", report.degraded},
          {"names", names},
          {"t", to_array(report.t_stats)},
          {"p_value", to_array(report.p_values)},
          {"reject", reject}};
}

json simulation_report(const SimConfig& cfg, const SimResult& result, bool include_p_values) {
  json failures = json::array();
  for (const auto& [r, msg] : result.failures) failures.push_back({{"replication", r}, {"message", msg}});
  Eigen::Matrix2d mean_sigma = Eigen::Matrix2d::Zero();
  double mean_cross = 0.0;
  for (const auto& rec : result.records) {
    mean_sigma += rec.sigma;
    mean_cross += rec.cross_moment;
  }
  const double used = static_cast<double>(result.records.size());
  if (used > 0) {
    mean_sigma /= used;
    mean_cross /= used;
  }
  json out = {{"schema_version", kSchemaVersion},
              {"command", "simulate"},
              {"config", to_json(cfg)},
              {"fp", result.fp},
              {"tp", result.tp ? json(*result.tp) : json(nullptr)},
              {"replications_used", result.records.size()},
              {"failures", failures},
              {"degraded", result.degraded},
              {"true_u", {result.true_u1, result.true_u2}},
              {"gamma_support", result.gamma_support},
              {"mean_sigma", matrix_json(mean_sigma)},
              {"mean_cross_moment", mean_cross},
              {"null_t_count", result.null_t.size()},
              {"rejection_rate", to_array(result.rejection_rate)}};
  if (include_p_values) out["p_values"] = matrix_json(result.p_values);
  return out;
}

void write_se_csv(std::ostream& out, const SeParams& params) {
  out << "t,sigma_bar_sq,zeta_bar_sq,theta,b,omega\n";
  for (std::size_t t = 0; t < params.sigma_bar_sq.size(); ++t) {
    out << t << ',' << format_double(params.sigma_bar_sq[t]) << ',' << format_double(params.zeta_bar_sq[t]) << ','
        << format_double(params.theta_seq[t]) << ',' << format_double(params.b_seq[t]) << ','
        << format_double(params.omega_seq[t]) << '\n';
  }
}

void write_qq_csv(std::ostream& out, const std::vector<std::pair<double, double>>& pairs) {
  out << "theoretical,sample\n";
  for (const auto& [q, s] : pairs) out << format_double(q) << ',' << format_double(s) << '\n';
}

}  // namespace npamp
