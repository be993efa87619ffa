#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "npamp/amp.hpp"
#include "npamp/dataset.hpp"
#include "npamp/np_test.hpp"
#include "npamp/simulation.hpp"
#include "npamp/state_evolution.hpp"

namespace npamp {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// CSV with a header row; the first column must be named `y`, the rest are
/// predictors. Errors name the offending row (1-based, header is row 1) and
/// column.
Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset parse_dataset(const std::string& path);

void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

nlohmann::json to_json(const ErrorDistribution& dist);
ErrorDistribution error_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SimConfig& cfg);
/// Strict: unknown keys and a missing or unsupported schema_version are
/// rejected. Absent fields keep their defaults.
SimConfig config_from_json(const nlohmann::json& j);

/// A preset name or a path to a JSON config file.
SimConfig load_config(const std::string& path_or_preset);

nlohmann::json fit_report(const AmpFit& fit, const std::vector<std::string>& names);
nlohmann::json test_report(const TestReport& report, const std::vector<std::string>& names);
nlohmann::json simulation_report(const SimConfig& cfg, const SimResult& result, bool include_p_values = false);

/// Columns t, sigma_bar_sq, zeta_bar_sq, theta, b, omega.
void write_se_csv(std::ostream& out, const SeParams& params);
/// Columns theoretical, sample.
void write_qq_csv(std::ostream& out, const std::vector<std::pair<double, double>>& pairs);

}  // namespace npamp
