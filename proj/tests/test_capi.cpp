#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "decovid/decovid.h"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

// Exercises the shared library through the C header only.

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data(const char* name) { return std::string(DCV_TEST_DATA_DIR) + "/" + name; }

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> row_major(const Eigen::MatrixXd& m) {
  const RowMajor r = m;
  return {r.data(), r.data() + r.size()};
}

Eigen::MatrixXd from_row_major(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const RowMajor>(v.data(), rows, cols);
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::string(dcv_version()).size() > 0);
  CHECK(std::string(dcv_status_string(DCV_OK)) != std::string(dcv_status_string(DCV_ERR_CONFIG)));
  dcv_panel_free(nullptr);
  dcv_indicator_free(nullptr);
  dcv_decovid_free(nullptr);
  dcv_factors_free(nullptr);
  dcv_var_free(nullptr);
  dcv_config_free(nullptr);
  dcv_run_result_free(nullptr);
}

TEST_CASE("panel parse and load") {
  const auto text = slurp(data("toy3_fredmd.csv"));
  dcv_panel* p = nullptr;
  REQUIRE(dcv_panel_parse(text.data(), text.size(), &p) == DCV_OK);
  CHECK(dcv_panel_cols(p) == 3);
  CHECK(dcv_panel_rows(p) > 10);
  CHECK(std::string(dcv_panel_name(p, 2)) == "INDPRO");
  CHECK(dcv_panel_tcode(p, 1) == 2);
  int y = 0, m = 0;
  CHECK(dcv_panel_date(p, 1, &y, &m) == DCV_OK);
  CHECK(y == 2017);
  CHECK(m == 2);
  CHECK(dcv_panel_value(p, 0, 0) == 5.0004);
  CHECK(dcv_panel_date(p, 100000, &y, &m) == DCV_ERR_INVALID_ARGUMENT);
  CHECK(dcv_panel_row_errors(p) == 0);
  dcv_panel_free(p);

  const std::string bad = "sasdate,A\n1/1/2000,1\n";
  p = nullptr;
  CHECK(dcv_panel_parse(bad.data(), bad.size(), &p) == DCV_ERR_FORMAT);
  CHECK(p == nullptr);
  CHECK(std::string(dcv_last_error()).size() > 0);

  CHECK(dcv_panel_load("/nonexistent/panel.csv", &p) == DCV_ERR_NOT_FOUND);
  CHECK(std::string(dcv_last_error()).find("/nonexistent/panel.csv") != std::string::npos);
  CHECK(dcv_panel_parse(nullptr, 0, &p) == DCV_ERR_INVALID_ARGUMENT);
}

TEST_CASE("covid indicator") {
  dcv_indicator* ind = nullptr;
  REQUIRE(dcv_indicator_load(data("covid_national_history_fixture.csv").c_str(), DCV_KIND_POSITIVE, 2020, 3, &ind) ==
          DCV_OK);
  bool seen = false;
  for (size_t i = 0; i < dcv_indicator_months(ind); ++i) {
    int y = 0, m = 0;
    double level = 0.0, growth = 0.0;
    REQUIRE(dcv_indicator_month(ind, i, &y, &m, &level, &growth) == DCV_OK);
    if (y == 2020 && m == 3) {
      seen = true;
      CHECK(level == 196830.0);
      CHECK(growth == doctest::Approx(std::log(196830.0 / 16.0)).epsilon(1e-12));
    }
  }
  CHECK(seen);
  CHECK(dcv_indicator_month(ind, 0, nullptr, nullptr, nullptr, nullptr) == DCV_OK);
  dcv_indicator_free(ind);
  CHECK(dcv_indicator_load(data("covid_national_history_fixture.csv").c_str(), DCV_KIND_POSITIVE, 2020, 13, &ind) ==
        DCV_ERR_INVALID_ARGUMENT);
}

TEST_CASE("design and de-covid run") {
  const std::vector<double> path{9.4175, 1.493, -0.199, 0.147, 0.826, -0.265};
  const size_t rows = 30, t0 = 23;
  std::vector<double> v(rows, 0.0);
  for (size_t i = 0; i < path.size(); ++i) v[t0 + 1 + i] = path[i];

  std::vector<double> d(100);
  size_t dr = 0, dc = 0;
  REQUIRE(dcv_decovid_design(4, 2, t0, v.data(), rows, d.data(), d.size(), &dr, &dc) == DCV_OK);
  CHECK(dr == 6);
  CHECK(dc == 4);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 9.4175);
  CHECK(d[2] == 0.0);
  CHECK(d[4 + 2] == 9.4175);
  CHECK(dcv_decovid_design(4, 2, t0, v.data(), rows, d.data(), 5, &dr, &dc) == DCV_ERR_INVALID_ARGUMENT);
  CHECK(dcv_decovid_design(5, 2, t0, v.data(), rows, d.data(), d.size(), &dr, &dc) != DCV_OK);

  std::mt19937_64 rng(7);
  Eigen::MatrixXd x = oracle::gaussian(static_cast<Eigen::Index>(rows), 3, rng);
  for (size_t t = t0 + 1; t < rows; ++t) x(static_cast<Eigen::Index>(t), 0) += 2.0 * v[t];
  const auto xr = row_major(x);
  dcv_decovid* run = nullptr;
  REQUIRE(dcv_decovid_run(xr.data(), rows, 3, v.data(), 4, 2, t0, &run) == DCV_OK);
  std::vector<double> adj(rows * 3), mu1((rows - t0 - 1) * 3), mu0(3);
  REQUIRE(dcv_decovid_x(run, adj.data(), adj.size()) == DCV_OK);
  REQUIRE(dcv_decovid_mu1(run, mu1.data(), mu1.size()) == DCV_OK);
  REQUIRE(dcv_decovid_mu0(run, mu0.data(), mu0.size()) == DCV_OK);
  CHECK(dcv_decovid_mu0(run, mu0.data(), 2) == DCV_ERR_INVALID_ARGUMENT);
  const Eigen::MatrixXd a = from_row_major(adj, static_cast<Eigen::Index>(rows), 3);
  const Eigen::MatrixXd f = from_row_major(mu1, static_cast<Eigen::Index>(rows - t0 - 1), 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(mu0[static_cast<size_t>(j)] == doctest::Approx(x.col(j).head(t0 + 1).mean()).epsilon(1e-12));
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(rows); ++t) {
      const double expected = t <= static_cast<Eigen::Index>(t0) ? x(t, j) - mu0[static_cast<size_t>(j)]
                                                                 : x(t, j) - f(t - static_cast<Eigen::Index>(t0) - 1, j);
      CHECK(a(t, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  for (size_t i = 0; i < dcv_decovid_warnings(run); ++i) CHECK(dcv_decovid_warning(run, i) != nullptr);
  dcv_decovid_free(run);
}

TEST_CASE("factors") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd f = oracle::gaussian(60, 1, rng);
  const Eigen::MatrixXd x = f * oracle::gaussian(1, 8, rng) + oracle::gaussian(60, 8, rng, 0.01);
  const auto xr = row_major(x);
  dcv_factors* fs = nullptr;
  REQUIRE(dcv_factors_estimate(xr.data(), 60, 8, 2, &fs) == DCV_OK);
  CHECK(dcv_factors_rank(fs) == 2);
  std::vector<double> scores(120), loadings(16), shares(2);
  REQUIRE(dcv_factors_scores(fs, scores.data(), scores.size()) == DCV_OK);
  REQUIRE(dcv_factors_loadings(fs, loadings.data(), loadings.size()) == DCV_OK);
  REQUIRE(dcv_factors_shares(fs, shares.data(), shares.size()) == DCV_OK);
  const Eigen::MatrixXd s = from_row_major(scores, 60, 2);
  CHECK(std::abs(oracle::pearson(s.col(0), f.col(0))) > 0.999);
  CHECK(shares[0] > 0.99);
  CHECK(s.col(0).squaredNorm() / 60.0 == doctest::Approx(1.0).epsilon(1e-10));
  dcv_factors_free(fs);
  CHECK(dcv_factors_estimate(xr.data(), 60, 8, 9, &fs) != DCV_OK);
}

TEST_CASE("stochastic volatility") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd e = oracle::gaussian(300, 1, rng);
  std::vector<double> u(300);
  double rho = 2.0, mu = 0.0, s2 = -1.0;
  REQUIRE(dcv_sv_fit(e.data(), 300, &rho, &mu, &s2, u.data()) == DCV_OK);
  CHECK(std::abs(rho) < 1.0);
  CHECK(s2 >= 0.0);
  for (double x : u) CHECK(x > 0.0);
  CHECK(dcv_sv_fit(e.data(), 300, nullptr, nullptr, nullptr, nullptr) == DCV_OK);
  CHECK(dcv_sv_fit(e.data(), 50, &rho, &mu, &s2, nullptr) == DCV_ERR_INVALID_ARGUMENT);
}

TEST_CASE("VAR estimation, responses and bootstrap") {
  std::mt19937_64 rng(10);
  const Eigen::Index t_n = 300;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(t_n, 2);
  const Eigen::MatrixXd z = oracle::gaussian(t_n, 2, rng);
  Eigen::Matrix2d a;
  a << 0.5, 0.1, 0.2, 0.3;
  for (Eigen::Index t = 1; t < t_n; ++t) y.row(t) = (a * y.row(t - 1).transpose()).transpose() + z.row(t);
  const auto yr = row_major(y);
  dcv_var* m = nullptr;
  REQUIRE(dcv_var_estimate(yr.data(), static_cast<size_t>(t_n), 2, 1, nullptr, 0, &m) == DCV_OK);
  CHECK(dcv_var_dim(m) == 2);
  std::vector<double> sigma(4), b(4), a1(4), psi(3 * 4), lo(3 * 4), hi(3 * 4), shocks(299 * 2);
  REQUIRE(dcv_var_sigma(m, sigma.data(), 4) == DCV_OK);
  REQUIRE(dcv_var_impact(m, b.data(), 4) == DCV_OK);
  REQUIRE(dcv_var_lag(m, 1, a1.data(), 4) == DCV_OK);
  CHECK(dcv_var_lag(m, 2, a1.data(), 4) == DCV_ERR_INVALID_ARGUMENT);
  REQUIRE(dcv_var_irf(m, 2, psi.data(), psi.size()) == DCV_OK);
  const Eigen::MatrixXd bm = from_row_major(b, 2, 2);
  const Eigen::MatrixXd am = from_row_major(a1, 2, 2);
  CHECK(oracle::companion_irf({am}, bm, 0)[0] == bm);
  CHECK((bm * bm.transpose() - from_row_major(sigma, 2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  const auto ref = oracle::companion_irf({am}, bm, 2);
  for (int h = 0; h <= 2; ++h) {
    const std::vector<double> blk(psi.begin() + h * 4, psi.begin() + h * 4 + 4);
    CHECK((from_row_major(blk, 2, 2) - ref[static_cast<size_t>(h)]).cwiseAbs().maxCoeff() < 1e-12);
  }
  REQUIRE(dcv_var_bootstrap(m, 2, 200, 0.9, 5, lo.data(), hi.data(), lo.size()) == DCV_OK);
  for (size_t i = 0; i < psi.size(); ++i) {
    CHECK(lo[i] <= psi[i]);
    CHECK(psi[i] <= hi[i]);
  }
  CHECK(dcv_var_bootstrap(m, 2, 100, 0.9, 5, lo.data(), hi.data(), lo.size()) == DCV_ERR_INVALID_ARGUMENT);
  REQUIRE(dcv_var_shocks(m, shocks.data(), shocks.size()) == DCV_OK);
  dcv_var_free(m);
  CHECK(dcv_var_estimate(yr.data(), static_cast<size_t>(t_n), 2, 0, nullptr, 0, &m) != DCV_OK);
}

TEST_CASE("config and runs") {
  dcv_config* c = dcv_config_create();
  REQUIRE(c != nullptr);
  CHECK(dcv_config_set(c, "model_id", "3") == DCV_OK);
  CHECK(std::string(dcv_config_get(c, "model_id")) == "3");
  CHECK(dcv_config_get(c, "no_such_key") == nullptr);
  CHECK(dcv_config_set(c, "no_such_key", "1") == DCV_ERR_CONFIG);
  CHECK(dcv_config_set(c, "model_id", "x") == DCV_ERR_CONFIG);

  const auto dir = std::filesystem::temp_directory_path() / ("dcv_capi_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  CHECK(dcv_config_set(c, "output_dir", dir.c_str()) == DCV_OK);
  CHECK(dcv_config_set(c, "sim_n", "5") == DCV_OK);
  CHECK(dcv_config_set(c, "sim_t", "40") == DCV_OK);
  CHECK(dcv_config_set(c, "sim_start", "2017-01") == DCV_OK);
  dcv_run_result* r = nullptr;
  REQUIRE(dcv_run(c, "simulate", &r) == DCV_OK);
  REQUIRE(dcv_run_result_files(r) == 4);
  CHECK(std::filesystem::exists(dcv_run_result_file(r, 0)));
  CHECK(std::filesystem::path(dcv_run_result_file(r, 3)).filename() == "manifest.json");
  CHECK(dcv_run_result_file(r, 4) == nullptr);
  dcv_run_result_free(r);

  r = nullptr;
  CHECK(dcv_run(c, "dance", &r) == DCV_ERR_CONFIG);
  CHECK(r == nullptr);
  CHECK(dcv_config_set(c, "model_id", "5") == DCV_OK);
  CHECK(dcv_config_set(c, "macro_csv", "m.csv") == DCV_OK);
  CHECK(dcv_config_set(c, "covid_csv", "c.csv") == DCV_OK);
  CHECK(dcv_run(c, "decovid", &r) == DCV_ERR_CONFIG);
  CHECK(std::string(dcv_last_error()).find("model_id") != std::string::npos);
  dcv_config_free(c);
  std::filesystem::remove_all(dir);
}
