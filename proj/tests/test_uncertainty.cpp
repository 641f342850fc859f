#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace decovid;

namespace {

struct Planted {
  std::vector<double> e;
  Eigen::VectorXd h;
};

Planted planted_sv(int n, double mu, double rho, double sigma_eta, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Planted p;
  p.e.resize(static_cast<std::size_t>(n));
  p.h.resize(n);
  double s = z(rng) * sigma_eta / std::sqrt(1.0 - rho * rho);
  for (int t = 0; t < n; ++t) {
    if (t > 0) s = rho * s + sigma_eta * z(rng);
    p.h(t) = mu + s;
    p.e[static_cast<std::size_t>(t)] = std::exp(0.5 * p.h(t)) * z(rng);
  }
  return p;
}

std::vector<double> log_sq(const std::vector<double>& e, std::vector<int>& idx) {
  std::vector<double> y;
  idx.clear();
  for (std::size_t t = 0; t < e.size(); ++t) {
    if (is_missing(e[t])) continue;
    y.push_back(std::log(e[t] * e[t] + 1e-8) + 1.2704);
    idx.push_back(static_cast<int>(t));
  }
  return y;
}

}  // namespace

TEST_SUITE("uncertainty") {
  TEST_CASE("Kalman likelihood equals the dense Gaussian likelihood") {
    std::mt19937_64 rng(61);
    auto p = planted_sv(150, 0.3, 0.8, 0.4, rng);
    p.e[10] = kMissing;
    p.e[11] = kMissing;
    p.e[90] = kMissing;
    std::vector<int> idx;
    const auto y = log_sq(p.e, idx);
    for (auto [mu, rho, s2] : {std::tuple{0.0, 0.5, 0.2}, {0.3, 0.95, 0.05}, {-1.0, -0.3, 1.5}}) {
      const double kf = sv_loglik(p.e, mu, rho, s2);
      const double dense = oracle::sv_dense_loglik(y, idx, mu, rho, s2);
      CHECK(kf == doctest::Approx(dense).epsilon(1e-10));
    }
  }

  TEST_CASE("smoothed path equals dense conditioning at the fitted parameters") {
    std::mt19937_64 rng(62);
    auto p = planted_sv(160, 0.0, 0.9, 0.3, rng);
    p.e[0] = kMissing;
    p.e[70] = kMissing;
    const auto fit = fit_sv(p.e);
    std::vector<int> idx;
    const auto y = log_sq(p.e, idx);
    const auto dense = oracle::sv_dense_smooth(y, idx, 160, fit.mu, fit.rho, fit.sigma2_eta);
    CHECK(testing::max_abs((fit.h.array() - fit.mu).matrix() - dense) < 1e-8);
    CHECK(fit.observations == 158);
  }

  TEST_CASE("the optimum is a stationary point of the likelihood") {
    std::mt19937_64 rng(63);
    const auto p = planted_sv(400, 0.5, 0.9, 0.3, rng);
    const auto fit = fit_sv(p.e);
    CHECK(fit.converged);
    CHECK(std::abs(fit.rho) < 1.0);
    const double best = sv_loglik(p.e, fit.mu, fit.rho, fit.sigma2_eta);
    CHECK(best == doctest::Approx(fit.loglik).epsilon(1e-12));
    for (double d : {-1e-3, 1e-3}) {
      CHECK(sv_loglik(p.e, fit.mu + d, fit.rho, fit.sigma2_eta) <= best + 1e-8);
      CHECK(sv_loglik(p.e, fit.mu, fit.rho + d, fit.sigma2_eta) <= best + 1e-8);
      CHECK(sv_loglik(p.e, fit.mu, fit.rho, fit.sigma2_eta * (1 + d)) <= best + 1e-8);
    }
  }

  TEST_CASE("homoskedastic errors") {
    std::mt19937_64 rng(64);
    int inside = 0;
    std::vector<double> var_h;
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::MatrixXd e = oracle::gaussian(700, 1, rng);
      const auto fit = fit_sv(col_span(e, 0));
      inside += std::abs(std::exp(fit.mu) - 1.0) <= 0.15;
      var_h.push_back(fit.sigma2_eta / (1.0 - fit.rho * fit.rho));
    }
    // mu-hat is roughly N(0, (pi^2 / 2) / T) when the volatility is flat
    CHECK(inside >= oracle::binomial_floor(oracle::normal_inside(0.15, std::sqrt(4.9348 / 700.0)), 50));
    std::nth_element(var_h.begin(), var_h.begin() + 25, var_h.end());
    CHECK(var_h[25] < 0.1);
  }

  TEST_CASE("planted persistence") {
    std::mt19937_64 rng(65);
    std::vector<double> rho;
    for (int rep = 0; rep < 50; ++rep) {
      const auto p = planted_sv(700, 0.0, 0.95, 0.2, rng);
      rho.push_back(fit_sv(p.e).rho);
    }
    // the QML estimate occasionally collapses towards zero, so the centre is the median
    std::nth_element(rho.begin(), rho.begin() + 25, rho.end());
    CHECK(std::abs(rho[25] - 0.95) <= 0.1);
  }

  TEST_CASE("scale equivariance") {
    std::mt19937_64 rng(66);
    for (int rep = 0; rep < 10; ++rep) {
      const auto p = planted_sv(500, 0.0, 0.9, 0.3, rng);
      std::vector<double> scaled(p.e);
      for (auto& x : scaled) x *= 10.0;
      const auto a = fit_sv(p.e);
      const auto b = fit_sv(scaled);
      CHECK(std::abs(b.mu - a.mu - 2.0 * std::log(10.0)) < 0.02);
      CHECK(std::abs(b.rho - a.rho) < 0.02);
    }
  }

  TEST_CASE("two volatility regimes") {
    std::mt19937_64 rng(67);
    std::normal_distribution<double> z;
    double ratio_sum = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
      std::vector<double> e(700);
      for (int t = 0; t < 700; ++t) e[t] = (t < 350 ? 1.0 : 3.0) * z(rng);
      const auto u = individual_uncertainty(fit_sv(e));
      ratio_sum += u.segment(400, 250).mean() / u.segment(50, 250).mean();
    }
    CHECK(ratio_sum / reps == doctest::Approx(3.0).epsilon(0.10));
  }

  TEST_CASE("too few observations") {
    std::mt19937_64 rng(68);
    Eigen::MatrixXd e = oracle::gaussian(120, 1, rng);
    for (int t = 0; t < 30; ++t) e(t, 0) = kMissing;
    CHECK_THROWS_AS((void)fit_sv(col_span(e, 0)), Error);
  }

  TEST_CASE("analytic uncertainty") {
    SvFit f;
    f.h = Eigen::VectorXd::LinSpaced(7, -1.0, 2.0);
    f.mu = 0.4;
    f.rho = 0.0;
    f.sigma2_eta = 0.3;
    const auto u = individual_uncertainty(f);
    for (Eigen::Index t = 0; t < u.size(); ++t) CHECK(u(t) == doctest::Approx(std::sqrt(std::exp(0.4 + 0.15))));
    f.rho = 0.7;
    f.sigma2_eta = 0.0;
    const auto d = individual_uncertainty(f);
    for (Eigen::Index t = 0; t < d.size(); ++t)
      CHECK(d(t) == doctest::Approx(std::sqrt(std::exp(0.7 * f.h(t) + 0.3 * 0.4))).epsilon(1e-14));
  }

  TEST_CASE("aggregation") {
    const auto dates = month_range({2000, 1}, 2);
    Eigen::MatrixXd two(2, 2);
    two << 1, 3, 1, 3;
    CHECK(aggregate_uncertainty("U", dates, {"a", "b"}, two).aggregate == Eigen::Vector2d(2, 2));

    Eigen::MatrixXd same(2, 3);
    same << 1.5, 1.5, 1.5, 0.2, 0.2, 0.2;
    const auto s = aggregate_uncertainty("U", dates, {}, same);
    CHECK(s.aggregate(0) == doctest::Approx(1.5));
    CHECK(s.aggregate(1) == doctest::Approx(0.2));

    std::mt19937_64 rng(69);
    const Eigen::MatrixXd a = oracle::gaussian(2, 4, rng).cwiseAbs();
    Eigen::MatrixXd perm = a;
    perm.col(0).swap(perm.col(3));
    CHECK(testing::max_abs(aggregate_uncertainty("U", dates, {}, a).aggregate -
                           aggregate_uncertainty("U", dates, {}, perm).aggregate) < 1e-15);
    const Eigen::MatrixXd b = oracle::gaussian(2, 4, rng).cwiseAbs();
    const Eigen::MatrixXd ab = 2.0 * a + 3.0 * b;
    CHECK(testing::max_abs(aggregate_uncertainty("U", dates, {}, ab).aggregate -
                           (2.0 * aggregate_uncertainty("U", dates, {}, a).aggregate +
                            3.0 * aggregate_uncertainty("U", dates, {}, b).aggregate)) < 1e-14);

    Eigen::MatrixXd holes(2, 2);
    holes << 1, kMissing, 2, 4;
    const auto h = aggregate_uncertainty("U", dates, {}, holes);
    CHECK(h.aggregate(0) == 1.0);
    CHECK(h.aggregate(1) == 3.0);

    CHECK_THROWS_AS((void)aggregate_uncertainty("U", dates, {}, Eigen::MatrixXd(2, 0)), Error);
  }

  TEST_CASE("covid uncertainty is the pointwise gap") {
    const auto dates = month_range({2000, 1}, 3);
    Eigen::MatrixXd a(3, 1), b(3, 1);
    a << 1, 2, 3;
    b << 0.5, 2, 1;
    const auto ua = aggregate_uncertainty("U(X)", dates, {}, a);
    const auto ub = aggregate_uncertainty("U(x)", dates, {}, b);
    CHECK(covid_uncertainty(ua, ua).cwiseAbs().maxCoeff() == 0.0);
    CHECK(covid_uncertainty(ua, ub) == Eigen::Vector3d(0.5, 0, 2));
    const auto shifted = aggregate_uncertainty("U(x)", month_range({2000, 2}, 3), {}, b);
    CHECK_THROWS_AS((void)covid_uncertainty(ua, shifted), Error);
    const auto st = ua.standardized();
    CHECK(st.mean() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(nan_sd(as_span(st)) == doctest::Approx(1.0));
    const auto flat = aggregate_uncertainty("flat", dates, {}, Eigen::MatrixXd::Ones(3, 1));
    CHECK_THROWS_AS((void)flat.standardized(), Error);
  }

  TEST_CASE("end to end on planted data") {
    std::mt19937_64 rng(70);
    PredictorSet w;
    w.dates = month_range({1970, 1}, 300);
    w.values = oracle::gaussian(300, 3, rng);
    w.names = {"F1", "F2", "vP"};
    w.macro_factor_count = 2;
    Eigen::MatrixXd y = oracle::gaussian(300, 4, rng);
    for (int t = 1; t < 300; ++t) y(t, 0) += 0.8 * w.values(t - 1, 0);
    const auto run = compute_uncertainty("U(X)", y, {"a", "b", "c", "d"}, w);
    CHECK(run.fits.size() == 4);
    CHECK(run.forecasts[0].selected.size() >= 1);
    for (Eigen::Index t = 0; t < 300; ++t) {
      CHECK(run.index.aggregate(t) > 0.0);
      CHECK(run.index.aggregate(t) == doctest::Approx(run.index.individual.row(t).mean()).epsilon(1e-12));
    }
    Eigen::MatrixXd short_y = oracle::gaussian(60, 1, rng);
    PredictorSet short_w = w;
    short_w.dates.resize(60);
    short_w.values = oracle::gaussian(60, 3, rng);
    try {
      (void)compute_uncertainty("U(x)", short_y, {"tiny"}, short_w);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("tiny") != std::string::npos);
    }
  }
}
