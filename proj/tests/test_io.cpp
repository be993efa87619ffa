#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "npamp/io.hpp"

using namespace npamp;

namespace {

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_dataset(in, "data.csv");
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("dataset parsing") {
  std::istringstream in("y,x1,x2\n1.5,0.1,-0.2\n-2,3e-1,4\n0,0,1\n");
  const Dataset d = parse_dataset(in);
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.y[1] == -2.0);
  CHECK(d.x(1, 0) == 0.3);
  CHECK(d.names == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("dataset parse errors name the cell") {
  const std::string blank = parse_error("y,x1,x2\n1,2,3\n4,,6\n");
  CHECK(blank.find("row 3") != std::string::npos);
  CHECK(blank.find("column 2") != std::string::npos);
  CHECK(blank.find("x1") != std::string::npos);
  const std::string word = parse_error("y,a,b\n1,2,3\n4,5,abc\n");
  CHECK(word.find("row 3") != std::string::npos);
  CHECK(word.find("column 3") != std::string::npos);
  CHECK_FALSE(parse_error("y,a\n1,nan\n2,3\n").empty());
  CHECK_FALSE(parse_error("z,a\n1,2\n3,4\n").empty());
  CHECK_FALSE(parse_error("y,a\n1,2\n").empty());
  CHECK_FALSE(parse_error("y,a,b\n1,2,3\n4,5\n").empty());
  CHECK_THROWS_AS(parse_dataset(std::string("/nonexistent/file.csv")), std::invalid_argument);
}

TEST_CASE("dataset round trip is exact") {
  Dataset d;
  d.y = Eigen::VectorXd::Random(6);
  d.x = Eigen::MatrixXd::Random(6, 4) * 1e-3;
  d.x(2, 3) = 1.0 / 3.0;
  d.names = {"a", "b", "c", "d"};
  std::stringstream io;
  write_dataset(io, d);
  const Dataset back = parse_dataset(io);
  CHECK(back.y == d.y);
  CHECK(back.x == d.x);
  CHECK(back.names == d.names);
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.0) == "-2");
  const double third = 1.0 / 3.0;
  CHECK(std::stod(format_double(third)) == third);
}

TEST_CASE("error distribution json") {
  const std::vector<ErrorDistribution> laws = {
      ErrorDistribution(NormalLaw{0.0, 0.5}), ErrorDistribution(StudentTLaw{3.0}, 0.5),
      ErrorDistribution(LaplaceLaw{0.0, 1.0}), ErrorDistribution(MixtureNormalLaw{{0.9, 0.1}, {-0.2, 1.8}, {0.25, 0.01}}),
      ErrorDistribution(EmpiricalLaw{{-1.0, 0.5, 2.0}}, 1.0)};
  for (const auto& dist : laws) {
    const auto j = to_json(dist);
    const ErrorDistribution back = error_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(distribution_expectile(back, 0.8) == distribution_expectile(dist, 0.8));
  }
  CHECK_THROWS_AS(error_from_json(nlohmann::json{{"kind", "cauchy"}}), std::invalid_argument);
}

TEST_CASE("config json round trip and strictness") {
  for (const auto& name : preset_names()) {
    const SimConfig cfg = preset(name);
    const auto j = to_json(cfg);
    CHECK(j.at("schema_version") == kSchemaVersion);
    CHECK(to_json(config_from_json(j)) == j);
  }
  auto j = to_json(preset("hetero_normal"));
  j["replicatons"] = 5;
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
  j = to_json(preset("hetero_normal"));
  j.erase("schema_version");
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
  j = to_json(preset("hetero_normal"));
  j["schema_version"] = 99;
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
  j = to_json(preset("hetero_normal"));
  j["amp"]["foo"] = 1;
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);

  const SimConfig sparse = config_from_json(nlohmann::json{{"schema_version", 1}, {"n", 50}, {"p", 80}});
  CHECK(sparse.n == 50);
  CHECK(sparse.replications == SimConfig{}.replications);
}

TEST_CASE("report schemas") {
  std::ostringstream se;
  write_se_csv(se, SeParams{{1.0}, {2.0}, {0.5}, {0.25}, {0.1}});
  CHECK(se.str() == "t,sigma_bar_sq,zeta_bar_sq,theta,b,omega\n0,1,2,0.5,0.25,0.1\n");
  std::ostringstream qq;
  write_qq_csv(qq, {{-1.0, -0.5}});
  CHECK(qq.str() == "theoretical,sample\n-1,-0.5\n");
}

TEST_CASE("shipped config files match the presets") {
  for (const auto& name : preset_names()) {
    const std::string path = std::string(NPAMP_SOURCE_DIR) + "/configs/" + name + ".json";
    CHECK_MESSAGE(to_json(load_config(path)) == to_json(preset(name)), name);
  }
}
