#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "npamp/amp.hpp"
#include "npamp/errors.hpp"
#include "npamp/normal.hpp"
#include "support/oracles.hpp"

using namespace npamp;
using doctest::Approx;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double slope_average(const Eigen::VectorXd& z, double b, const ExpectileSpec& spec, double delta, double omega) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += effective_score_slope(z[i], b, spec);
  return (delta / omega) * s / static_cast<double>(z.size());
}

}  // namespace

TEST_CASE("adjust_residuals") {
  Dataset d;
  d.x.resize(3, 2);
  d.x << 1.0, -0.5, 0.25, 2.0, -1.5, 0.75;
  d.y = Eigen::Vector3d(0.3, -1.2, 2.0);
  const ExpectileSpec spec{0.7, 0.1};

  const AmpState init = AmpState::initial(2);
  CHECK(adjust_residuals(d, init, spec, 2.0 / 3.0) == d.y);

  AmpState st;
  st.t = 4;
  st.beta_hat = Eigen::Vector2d(0.4, -0.2);
  st.z = Eigen::Vector3d(0.5, -0.3, 0.1);
  st.b = 0.8;
  st.omega = 0.5;
  st.support_size = 0;
  CHECK((adjust_residuals(d, st, spec, 2.0 / 3.0) - (d.y - d.x * st.beta_hat)).norm() == 0.0);

  st.support_size = 1;
  const Eigen::VectorXd z = adjust_residuals(d, st, spec, 2.0 / 3.0);
  for (int i = 0; i < 3; ++i) {
    const double w = st.z[i] <= spec.u ? 1.0 - spec.tau : spec.tau;
    const double c = 2.0 * st.b * w;
    const double g = (2.0 / 3.0) / 0.5 * c / (c + 1.0) * (st.z[i] - spec.u);
    const double expect = d.y[i] - (d.x(i, 0) * 0.4 + d.x(i, 1) * -0.2) + g * 1.0 / 3.0;
    CHECK(z[i] == Approx(expect).epsilon(1e-15));
  }
  st.beta_hat = Eigen::Vector3d::Zero();
  CHECK_THROWS_AS(adjust_residuals(d, st, spec, 2.0 / 3.0), std::invalid_argument);
}

TEST_CASE("update_b") {
  const double tau = 0.8;
  Eigen::VectorXd above = Eigen::VectorXd::LinSpaced(50, 0.1, 3.0);
  const double r = 5.0 / 50.0;
  CHECK(update_b(above, 5, {tau, 0.0}) == Approx(r / (2.0 * tau * (1.0 - r))).epsilon(1e-10));
  Eigen::VectorXd below = -above;
  CHECK(update_b(below, 5, {tau, 0.0}) == Approx(r / (2.0 * (1.0 - tau) * (1.0 - r))).epsilon(1e-10));
  Eigen::VectorXd at_u = Eigen::VectorXd::Constant(50, 0.25);
  CHECK(update_b(at_u, 5, {tau, 0.25}) == Approx(r / (2.0 * (1.0 - tau) * (1.0 - r))).epsilon(1e-10));

  Eigen::VectorXd mixed(100);
  for (int i = 0; i < 100; ++i) mixed[i] = i < 40 ? -1.0 - i : 1.0 + i;
  const double b = update_b(mixed, 10, {tau, 0.0});
  const double c1 = 2 * b * (1 - tau), c2 = 2 * b * tau;
  CHECK(std::abs(c1 / (c1 + 1) * 0.4 + c2 / (c2 + 1) * 0.6 - 0.1) <= 1e-10);

  CHECK_THROWS_AS(update_b(mixed, 0, {tau, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(update_b(mixed, 100, {tau, 0.0}), NumericalError);
  CHECK_THROWS_AS(update_b(mixed, 150, {tau, 0.0}), NumericalError);
}

TEST_CASE("amp_iterate edge cases") {
  Dataset d;
  d.x = Eigen::MatrixXd::Zero(4, 6);
  d.y = Eigen::Vector4d(1.0, -1.0, 0.5, 2.0);
  const AmpState next = amp_iterate(d, AmpState::initial(6), {0.5, 0.0}, 4.0 / 6.0, 1.0 / 6.0, 1.0);
  CHECK(next.beta_tilde.isZero(0.0));
  CHECK(next.beta_hat.isZero(0.0));
  CHECK(next.support_size == 0);
  CHECK(next.z == d.y);

  Dataset one;
  one.x = Eigen::MatrixXd::Constant(1, 1, 1.0);
  one.y = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(amp_iterate(one, AmpState::initial(1), {0.5, 0.0}, 1.0, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(run_amp(one, {0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("iterates match a scalar-loop implementation") {
  const Dataset d = oracle::gaussian_instance(50, 100, 5, 3.0, 0.5, 7);
  const ExpectileSpec spec{0.3, -0.1};
  const double delta = 0.5, alpha = 1.5;
  AmpState st = AmpState::initial(100);
  std::vector<double> beta(100, 0.0), z_prev;
  double b_prev = 0.0, omega_prev = 0.0;
  int k_prev = 0;
  double omega = 5.0 / 100.0;
  for (int t = 0; t < 6; ++t) {
    const oracle::Iterate ref = oracle::amp_step(d, beta, z_prev, b_prev, omega_prev, k_prev, spec.tau, spec.u, omega, alpha);
    st = amp_iterate(d, st, spec, delta, omega, alpha);
    for (int i = 0; i < 50; ++i) REQUIRE(st.z[i] == Approx(ref.z[i]).epsilon(1e-12).scale(1.0));
    REQUIRE(st.b == Approx(ref.b).epsilon(1e-10));
    REQUIRE(st.zeta_sq == Approx(ref.zeta_sq).epsilon(1e-12));
    for (int j = 0; j < 100; ++j) {
      REQUIRE(st.beta_tilde[j] == Approx(ref.beta_tilde[j]).epsilon(1e-12).scale(1.0));
      REQUIRE(st.beta_hat[j] == Approx(ref.beta_next[j]).epsilon(1e-12).scale(1.0));
    }
    REQUIRE(st.support_size == ref.support_next);
    beta = to_std(st.beta_hat);
    z_prev = ref.z;
    b_prev = ref.b;
    omega_prev = omega;
    k_prev = ref.support_next;
    omega = std::max(1, ref.support_next) / 100.0;
  }
}

TEST_CASE("per-iterate invariants") {
  const Dataset d = oracle::gaussian_instance(80, 160, 6, 3.0, 0.5, 12);
  for (double tau : {0.2, 0.5, 0.8}) {
    const ExpectileSpec spec{tau, tau == 0.5 ? 0.0 : (tau < 0.5 ? -0.27 : 0.27)};
    AmpState st = AmpState::initial(160);
    double omega = 8.0 / 160.0;
    for (int t = 0; t < 15; ++t) {
      st = amp_iterate(d, st, spec, 0.5, omega, 1.25);
      const Eigen::VectorXd g = score_vector(st.z, st.b, spec, 0.5, omega);
      CHECK(std::abs(st.zeta_sq - g.squaredNorm() / 80.0) <= 1e-12 * std::max(1.0, st.zeta_sq));
      CHECK(std::abs(slope_average(st.z, st.b, spec, 0.5, omega) - 1.0) <= 1e-8);
      Eigen::Index nz = 0;
      for (Eigen::Index j = 0; j < 160; ++j) nz += st.beta_hat[j] != 0.0;
      CHECK(nz == st.support_size);
      omega = std::max<Eigen::Index>(st.support_size, 1) / 160.0;
    }
  }
}

TEST_CASE("fixed point and selection") {
  const Dataset d = oracle::gaussian_instance(100, 200, 5, 3.0, 0.5, 4);
  const AmpFit fit = run_amp(d, {0.8, 0.2746});
  REQUIRE(fit.converged);
  CHECK(fit.delta == 0.5);
  CHECK(fit.omega > 0.0);
  CHECK(fit.omega < 1.0);
  CHECK(fit.trials.size() == default_alpha_grid().size());
  for (const auto& t : fit.trials) {
    if (t.converged) CHECK(fit.state.zeta_emp <= t.zeta_emp);
  }
  const AmpState again = amp_iterate(d, fit.state, fit.spec, fit.delta,
                                     std::max<Eigen::Index>(fit.state.support_size, 1) / 200.0, fit.alpha);
  CHECK((again.beta_hat - fit.state.beta_hat).norm() <= 1e-5 * std::max(1.0, fit.state.beta_hat.norm()));
}

TEST_CASE("default grid and settings") {
  const auto grid = default_alpha_grid();
  REQUIRE(grid.size() == 11);
  CHECK(grid.front() == 0.5);
  CHECK(grid.back() == 3.0);
  AmpSettings bad;
  bad.alpha_grid = {};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = {};
  bad.alpha_grid = {1.0, -1.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = {};
  bad.tol = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  const Dataset wide = oracle::gaussian_instance(30, 20, 2, 1.0, 0.5, 1);
  CHECK_THROWS_AS(run_amp(wide, {0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("pure noise gives a near-empty support") {
  std::vector<Eigen::Index> sizes;
  for (unsigned seed = 1; seed <= 21; ++seed) {
    const Dataset d = oracle::gaussian_instance(100, 200, 0, 0.0, 0.5, seed);
    sizes.push_back(run_amp(d, {0.5, 0.0}).state.support_size);
  }
  std::nth_element(sizes.begin(), sizes.begin() + 10, sizes.end());
  CHECK(sizes[10] <= 10);
}

TEST_CASE("agrees with a lasso solver at tau = 0.5") {
  const Dataset d = oracle::gaussian_instance(100, 200, 5, 3.0, 0.5, 31);
  const AmpFit fit = run_amp(d, {0.5, 0.0});
  REQUIRE(fit.converged);
  const double lambda = fit.state.theta * (1.0 - static_cast<double>(fit.state.support_size) / 100.0);
  const Eigen::VectorXd lasso = oracle::lasso_fista(d.x, d.y, lambda);
  CHECK((fit.state.beta_hat - lasso).squaredNorm() / 200.0 <= 1e-3);
}

TEST_CASE("scale covariance at a fixed multiplier") {
  const Dataset d = oracle::gaussian_instance(60, 120, 4, 3.0, 0.5, 8);
  Dataset scaled = d;
  const double c = 3.7;
  scaled.y *= c;
  AmpSettings s;
  s.max_iter = 40;
  const AmpFit a = run_amp_fixed_alpha(d, {0.5, 0.0}, 1.5, s);
  const AmpFit b = run_amp_fixed_alpha(scaled, {0.5, 0.0}, 1.5, s);
  CHECK(a.state.support_size == b.state.support_size);
  CHECK((b.state.beta_hat - c * a.state.beta_hat).norm() <= 1e-9 * c * a.state.beta_hat.norm());
  CHECK((b.state.beta_tilde - c * a.state.beta_tilde).norm() <= 1e-9 * c * a.state.beta_tilde.norm());
  CHECK(b.state.zeta_emp == Approx(c * a.state.zeta_emp).epsilon(1e-9));
}

TEST_CASE("support recovery and debiased spread") {
  // fixed design, 50 error draws
  Eigen::VectorXd beta;
  const Dataset base = oracle::gaussian_instance(100, 200, 5, 3.0, 0.5, 77, &beta);
  std::mt19937_64 rng(78);
  std::normal_distribution<double> g(0.0, 0.5);
  double msd = 0.0, zeta_sq = 0.0;
  int recovered = 0;
  for (int r = 0; r < 50; ++r) {
    Dataset d = base;
    d.y = d.x * beta;
    for (Eigen::Index i = 0; i < 100; ++i) d.y[i] += g(rng);
    const AmpFit fit = run_amp(d, {0.5, 0.0});
    msd += (fit.state.beta_tilde - beta).squaredNorm() / 200.0;
    zeta_sq += fit.state.zeta_sq;
    bool all = true;
    for (int j = 0; j < 5; ++j) all = all && (std::abs(beta[j]) < 1.5 || fit.state.beta_hat[j] != 0.0);
    recovered += all;
  }
  CHECK(recovered >= 40);
  CHECK(msd / zeta_sq == Approx(1.0).epsilon(0.15));
}
