#include <cmath>
#include <random>

#include "doctest.h"
#include "npamp/puffer.hpp"
#include "npamp/simulation.hpp"
#include "support/oracles.hpp"

using namespace npamp;
using doctest::Approx;

namespace {

Eigen::MatrixXd column_correlation(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd inv = c.colwise().norm().cwiseInverse();
  return inv.asDiagonal() * (c.transpose() * c) * inv.asDiagonal();
}

// Sum over lags 1..3 of |mean correlation between columns j and j + lag|.
double banded_correlation(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = column_correlation(x);
  double total = 0.0;
  for (Eigen::Index lag = 1; lag <= 3; ++lag) total += std::abs(c.diagonal(lag).mean());
  return total;
}

double mean_offdiagonal_magnitude(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = column_correlation(x);
  const double p = static_cast<double>(c.rows());
  return (c.cwiseAbs().sum() - c.diagonal().cwiseAbs().sum()) / (p * p - p);
}

}  // namespace

TEST_CASE("D_hat rule") {
  CHECK(puffer_d_hat(0.05, 100) == 10.0);
  CHECK(puffer_d_hat(0.1, 100) == 10.0);
  CHECK(puffer_d_hat(std::nextafter(0.1, 1.0), 100) == 1.0 / std::nextafter(0.1, 1.0));
  CHECK(puffer_d_hat(2.0, 100) == 0.5);
}

TEST_CASE("flattening of a well-conditioned design") {
  Eigen::VectorXd beta;
  Dataset d = oracle::gaussian_instance(100, 200, 5, 3.0, 0.0, 9, &beta);
  const auto [out, tr] = puffer_transform(d);
  const double root_n = std::sqrt(100.0);
  REQUIRE(tr.singular_values.minCoeff() > 1.0 / root_n);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const double s = tr.singular_values[i];
    CHECK(tr.d_hat[i] == (s <= 1.0 / root_n ? root_n : 1.0 / s));
  }
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(out.x).singularValues();
  CHECK((sv.array() - std::sqrt(2.0)).abs().maxCoeff() <= 1e-8);
  CHECK((tr.f - tr.f.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // noiseless responses stay exact
  CHECK((out.y - out.x * beta).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("small singular values use the sqrt(n) branch") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(20, 40);
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = 0; j < 40; ++j) x(i, j) = g(rng);
  x.row(19) = x.row(18) + 1e-6 * x.row(0);
  const PufferTransform tr = puffer_of(x);
  int small = 0;
  for (Eigen::Index i = 0; i < 20; ++i) {
    const double s = tr.singular_values[i];
    CHECK(tr.d_hat[i] == (s <= 1.0 / std::sqrt(20.0) ? std::sqrt(20.0) : 1.0 / s));
    small += s <= 1.0 / std::sqrt(20.0);
  }
  CHECK(small >= 1);
}

TEST_CASE("model preservation and determinism") {
  SimConfig cfg = preset("ar03_null");
  const Scenario sc = generate_scenario(cfg, 2);
  const auto [out, tr] = puffer_transform(sc.data);
  const Eigen::VectorXd lhs = out.y - out.x * sc.beta0;
  CHECK((lhs - tr.f * sc.errors).cwiseAbs().maxCoeff() <= 1e-10);
  const PufferTransform again = puffer_of(sc.data.x);
  CHECK(again.f == tr.f);
  for (Eigen::Index k = 0; k < tr.u.cols(); ++k) {
    Eigen::Index i = 0;
    while (tr.u(i, k) == 0.0) ++i;
    CHECK(tr.u(i, k) > 0.0);
  }
}

TEST_CASE("correlation reduction on an AR(1) design") {
  SimConfig cfg = preset("ar03_null");
  const ScenarioDesign design = make_design(cfg);
  const PufferTransform tr = puffer_of(design.x);
  const Eigen::MatrixXd xt = tr.f * design.x;
  CHECK(banded_correlation(xt) < 0.5 * banded_correlation(design.x));
  CHECK(mean_offdiagonal_magnitude(xt) < mean_offdiagonal_magnitude(design.x));
}

TEST_CASE("rejections") {
  const Dataset tall = oracle::gaussian_instance(30, 10, 1, 1.0, 0.5, 1);
  CHECK_THROWS_AS(puffer_transform(tall), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 5);
  bad(1, 1) = NAN;
  CHECK_THROWS_AS(puffer_of(bad), std::invalid_argument);
}
