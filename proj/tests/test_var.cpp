#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "synthetic.hpp"
#include "var.hpp"

#include <cmath>
#include <random>

using namespace decovid;

namespace {

VarDgp bivariate_var2(std::uint64_t seed, Eigen::Index t_n = 700) {
  VarDgp d;
  d.intercept = Eigen::Vector2d(0.2, -0.1);
  Eigen::MatrixXd a1(2, 2), a2(2, 2), b(2, 2);
  a1 << 0.5, 0.1, 0.2, 0.3;
  a2 << -0.2, 0.05, 0.1, 0.15;
  b << 1.0, 0.0, 0.4, 0.8;
  d.lags = {a1, a2};
  d.impact = b;
  d.t_n = t_n;
  d.seed = seed;
  return d;
}

VarModel hand_model(const std::vector<Eigen::MatrixXd>& lags, const Eigen::MatrixXd& b) {
  VarModel m;
  m.p = static_cast<int>(lags.size());
  m.lags = lags;
  m.chol = b;
  m.sigma = b * b.transpose();
  return m;
}

}  // namespace

TEST_SUITE("var") {
  TEST_CASE("Cholesky examples") {
    CHECK(cholesky_identify(Eigen::Matrix3d::Identity()) == Eigen::MatrixXd(Eigen::Matrix3d::Identity()));
    Eigen::Matrix2d s;
    s << 4, 2, 2, 5;
    Eigen::Matrix2d b;
    b << 2, 0, 1, 2;
    CHECK(testing::max_abs(cholesky_identify(s) - b) < 1e-15);

    std::mt19937_64 rng(81);
    for (int rep = 0; rep < 100; ++rep) {
      const Eigen::MatrixXd a = oracle::gaussian(5, 5, rng);
      const Eigen::MatrixXd sigma = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(5, 5);
      const auto l = cholesky_identify(sigma);
      CHECK(testing::max_abs(l * l.transpose() - sigma) < 1e-12);
      CHECK(testing::max_abs(Eigen::MatrixXd(l.triangularView<Eigen::StrictlyUpper>())) == 0.0);
      CHECK((l.diagonal().array() > 0).all());
    }
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    try {
      (void)cholesky_identify(bad);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::domain);
    }
  }

  TEST_CASE("estimation invariants and the companion oracle") {
    const Eigen::MatrixXd y = simulate_var(bivariate_var2(82, 300));
    const auto m = estimate_var(y, 2);
    CHECK(m.dof == 300 - 2 - 5);
    CHECK(testing::max_abs(m.chol * m.chol.transpose() - m.sigma) < 1e-10);
    // residuals orthogonal to every regressor
    Eigen::MatrixXd x(298, 5);
    for (int t = 2; t < 300; ++t) x.row(t - 2) << 1.0, y.row(t - 1), y.row(t - 2);
    CHECK(testing::max_abs(x.transpose() * m.residuals) < 1e-8);
    // coefficients against the normal equations
    const Eigen::MatrixXd b = oracle::ols_normal(x, y.bottomRows(298));
    CHECK(testing::max_abs(b.row(0).transpose() - m.intercept) < 1e-10);
    CHECK(testing::max_abs(b.middleRows(1, 2).transpose() - m.lags[0]) < 1e-10);
    CHECK(testing::max_abs(b.middleRows(3, 2).transpose() - m.lags[1]) < 1e-10);

    const auto psi = irf(m, 30);
    const auto ref = oracle::companion_irf(m.lags, m.chol, 30);
    for (int h = 0; h <= 30; ++h) CHECK(testing::max_abs(psi[h] - ref[h]) < 1e-10);
    CHECK(psi[0] == m.chol);
  }

  TEST_CASE("known bivariate VAR(2) is recovered") {
    const auto dgp = bivariate_var2(0);
    Eigen::MatrixXd mean_err = Eigen::MatrixXd::Zero(2, 4);
    int within = 0, total = 0;
    for (int rep = 0; rep < 50; ++rep) {
      auto d = dgp;
      d.seed = 1000 + static_cast<std::uint64_t>(rep);
      const Eigen::MatrixXd y = simulate_var(d);
      const auto m = estimate_var(y, 2);
      Eigen::MatrixXd err(2, 4);
      err << m.lags[0] - dgp.lags[0], m.lags[1] - dgp.lags[1];
      mean_err += err / 50.0;
      // OLS standard errors: sigma_ii * [(X'X)^-1]_jj
      const Eigen::Index n = y.rows() - 2;
      Eigen::MatrixXd x(n, 5);
      for (Eigen::Index t = 2; t < y.rows(); ++t) x.row(t - 2) << 1.0, y.row(t - 1), y.row(t - 2);
      const Eigen::VectorXd xtx_inv = (x.transpose() * x).inverse().diagonal();
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j) {
          within += std::abs(err(i, j)) <= 2.0 * std::sqrt(m.sigma(i, i) * xtx_inv(1 + j));
          ++total;
        }
    }
    CHECK(mean_err.cwiseAbs().maxCoeff() <= 0.05);
    CHECK(within >= oracle::binomial_floor(oracle::normal_inside(2.0, 1.0), total));
  }

  TEST_CASE("white noise gives insignificant lags") {
    int within = 0, total = 0;
    for (int rep = 0; rep < 100; ++rep) {
      VarDgp d;
      d.intercept = Eigen::Vector2d::Zero();
      d.lags = {Eigen::Matrix2d::Zero()};
      d.impact = Eigen::Matrix2d::Identity();
      d.t_n = 700;
      d.seed = 2000 + static_cast<std::uint64_t>(rep);
      const Eigen::MatrixXd y = simulate_var(d);
      const auto m = estimate_var(y, 1);
      Eigen::MatrixXd x(699, 3);
      for (int t = 1; t < 700; ++t) x.row(t - 1) << 1.0, y.row(t - 1);
      const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
      for (int eq = 0; eq < 2; ++eq)
        for (int j = 0; j < 2; ++j) {
          const double se = std::sqrt(m.sigma(eq, eq) * xtx_inv(1 + j, 1 + j));
          within += std::abs(m.lags[0](eq, j)) <= 2.0 * se;
          ++total;
        }
    }
    CHECK(static_cast<double>(within) / total >= 0.9);
  }

  TEST_CASE("univariate AR(1)") {
    int inside = 0;
    for (int rep = 0; rep < 100; ++rep) {
      VarDgp d;
      d.intercept = Eigen::VectorXd::Zero(1);
      d.lags = {Eigen::MatrixXd::Constant(1, 1, 0.9)};
      d.impact = Eigen::MatrixXd::Identity(1, 1);
      d.t_n = 700;
      d.seed = 3000 + static_cast<std::uint64_t>(rep);
      inside += std::abs(estimate_var(simulate_var(d), 1).lags[0](0, 0) - 0.9) <= 0.03;
    }
    CHECK(inside >= 90);
  }

  TEST_CASE("analytic responses") {
    const auto m = hand_model({Eigen::MatrixXd::Constant(1, 1, 0.5)}, Eigen::MatrixXd::Identity(1, 1));
    const auto psi = irf(m, 6);
    for (int h = 0; h <= 6; ++h) CHECK(psi[h](0, 0) == std::pow(0.5, h));

    Eigen::Matrix2d b;
    b << 1.5, 0, -0.3, 0.7;
    const auto z = irf(hand_model({Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()}, b), 4);
    CHECK(z[0] == Eigen::MatrixXd(b));
    for (int h = 1; h <= 4; ++h) CHECK(z[h].cwiseAbs().maxCoeff() == 0.0);
    CHECK(irf(m, 0).size() == 1);
    CHECK_THROWS_AS((void)irf(m, -1), Error);
  }

  TEST_CASE("estimation errors") {
    std::mt19937_64 rng(83);
    Eigen::MatrixXd y = oracle::gaussian(20, 2, rng);
    CHECK_THROWS_AS((void)estimate_var(y, 0), Error);
    CHECK_NOTHROW((void)estimate_var(y, 6));  // 14 usable rows > 13 coefficients
    CHECK_THROWS_AS((void)estimate_var(y, 7), Error);
    y(3, 1) = kMissing;
    CHECK_THROWS_AS((void)estimate_var(y, 1), Error);
    Eigen::MatrixXd dup = oracle::gaussian(50, 1, rng);
    Eigen::MatrixXd two(50, 2);
    two << dup, dup;
    try {
      (void)estimate_var(two, 1);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::rank_deficient);
    }
  }

  TEST_CASE("bootstrap preconditions") {
    const auto m = estimate_var(simulate_var(bivariate_var2(84, 200)), 2);
    BootstrapOptions o;
    o.reps = 0;
    CHECK_THROWS_AS((void)bootstrap_irf(m, 5, o), Error);
    o.reps = 199;
    CHECK_THROWS_AS((void)bootstrap_irf(m, 5, o), Error);
    o.reps = 200;
    o.level = 1.0;
    CHECK_THROWS_AS((void)bootstrap_irf(m, 5, o), Error);
  }

  TEST_CASE("bands contain the point estimate and do not depend on threads") {
    const auto m = estimate_var(simulate_var(bivariate_var2(85, 300)), 2);
    BootstrapOptions o;
    o.reps = 300;
    o.threads = 1;
    const auto one = bootstrap_irf(m, 12, o);
    o.threads = 3;
    const auto three = bootstrap_irf(m, 12, o);
    CHECK(one.failures == 0);
    for (int h = 0; h <= 12; ++h) {
      CHECK(one.lower[h] == three.lower[h]);
      CHECK(one.upper[h] == three.upper[h]);
      CHECK((one.lower[h].array() <= one.point[h].array()).all());
      CHECK((one.upper[h].array() >= one.point[h].array()).all());
    }
    o.seed = 7;
    const auto other = bootstrap_irf(m, 12, o);
    CHECK(testing::max_abs(other.upper[3] - one.upper[3]) > 0.0);
  }

  TEST_CASE("a deterministic system has degenerate bands") {
    Eigen::MatrixXd y(80, 2);
    // slowly damped rotation about (1, -2)
    Eigen::Matrix2d a;
    a << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
    a *= 0.995;
    const Eigen::Vector2d centre(1.0, -2.0);
    y.row(0) << 4.0, 1.0;
    for (int t = 1; t < 80; ++t) y.row(t) = (centre + a * (y.row(t - 1).transpose() - centre)).transpose();
    const auto m = estimate_var(y, 1);
    CHECK(m.sigma.cwiseAbs().maxCoeff() < 1e-20);
    BootstrapOptions o;
    o.reps = 200;
    const auto bands = bootstrap_irf(m, 8, o);
    for (int h = 0; h <= 8; ++h) {
      CHECK(testing::max_abs(bands.lower[h] - bands.point[h]) < 1e-8);
      CHECK(testing::max_abs(bands.upper[h] - bands.point[h]) < 1e-8);
    }
  }

  TEST_CASE("pointwise coverage of the percentile bands") {
    VarDgp d;
    d.intercept = Eigen::Vector2d::Zero();
    Eigen::Matrix2d a;
    a << 0.5, 0.1, 0.0, 0.4;
    d.lags = {a};
    Eigen::Matrix2d b;
    b << 1.0, 0.0, 0.3, 1.0;
    d.impact = b;
    d.t_n = 300;
    const auto truth = oracle::companion_irf(d.lags, b, 6);
    long covered = 0, cells = 0;
    for (int trial = 0; trial < 200; ++trial) {
      d.seed = 4000 + static_cast<std::uint64_t>(trial);
      const auto m = estimate_var(simulate_var(d), 1);
      BootstrapOptions o;
      o.reps = 200;
      o.seed = derive_seed(99, static_cast<std::uint64_t>(trial));
      const auto bands = bootstrap_irf(m, 6, o);
      for (int h = 0; h <= 6; ++h) {
        covered += ((bands.lower[h].array() <= truth[h].array()) && (truth[h].array() <= bands.upper[h].array())).count();
        cells += 4;
      }
    }
    const double coverage = static_cast<double>(covered) / static_cast<double>(cells);
    MESSAGE("coverage " << coverage);
    CHECK(std::abs(coverage - 0.95) <= 0.05);
  }

  TEST_CASE("orthogonalized shocks") {
    const auto y = simulate_var(bivariate_var2(86, 200));
    auto m = estimate_var(y, 2, {}, {}, {}, month_range({2000, 1}, 200));
    const auto e = orthogonalized_shocks(m);
    CHECK(testing::max_abs(e * m.chol.transpose() - m.residuals) < 1e-10);
    const Eigen::MatrixXd cov = e.transpose() * e / static_cast<double>(m.dof);
    CHECK(testing::max_abs(cov - Eigen::MatrixXd::Identity(2, 2)) < 1e-10);
    const auto dates = residual_dates(m);
    CHECK(dates.size() == 198);
    CHECK(dates.front() == YearMonth{2000, 3});

    m.chol = Eigen::Matrix2d::Identity();
    CHECK(orthogonalized_shocks(m) == m.residuals);
    m.chol(1, 1) = 0.0;
    CHECK_THROWS_AS((void)orthogonalized_shocks(m), Error);
  }

  TEST_CASE("exogenous block per model") {
    const auto v = testing::aligned_v(30, 20, testing::kTableVP);
    DecovidSpec s;
    s.t0 = 20;
    s.q = 2;
    s.model_id = 4;
    const auto m4 = build_exog(s, v);
    CHECK(m4.names == std::vector<std::string>{"post", "v_t", "v_t-1", "v_t-2"});
    CHECK(m4.values(21, 1) == 9.4175);
    CHECK(m4.values(23, 3) == 9.4175);
    CHECK(m4.values.topRows(21).cwiseAbs().maxCoeff() == 0.0);

    s.model_id = 1;
    const auto m1 = build_exog(s, v);
    CHECK(m1.names == std::vector<std::string>{"D", "post", "v_t-1", "v_t-2"});
    CHECK(m1.values(22, 2) == 0.0);
    CHECK(m1.values(23, 3) == 0.0);
    CHECK(m1.values(23, 2) == 1.493);
    CHECK(m1.values.col(0).sum() == 1.0);

    s.model_id = 3;
    CHECK(build_exog(s, v).names == std::vector<std::string>{"D", "post", "v_t", "v_t-1", "v_t-2"});

    s.t0 = 29;
    const auto pre_only = build_exog(s, v);
    CHECK(pre_only.values.cols() == 0);
    CHECK(pre_only.warnings.size() == 5);
  }

  TEST_CASE("exogenous coefficients against the normal equations") {
    const auto v = testing::aligned_v(150, 135, testing::kTableVP);
    DecovidSpec s;
    s.t0 = 135;
    const auto z = build_exog(s, v);
    const Eigen::MatrixXd y = simulate_var(bivariate_var2(87, 150));
    const auto m = estimate_var(y, 2, z.values, {"a", "b"}, z.names);
    Eigen::MatrixXd x(148, 5 + z.values.cols());
    for (int t = 2; t < 150; ++t) x.row(t - 2) << 1.0, y.row(t - 1), y.row(t - 2), z.values.row(t);
    const Eigen::MatrixXd b = oracle::ols_normal(x, y.bottomRows(148));
    CHECK(testing::max_abs(b.bottomRows(z.values.cols()).transpose() - m.exog_coef) < 1e-8);
    CHECK(m.dof == 148 - x.cols());
  }
}
