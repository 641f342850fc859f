#include "synthetic.hpp"

#include <fmt/format.h>

#include <cmath>

namespace decovid {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

double ar_radius(const std::vector<double>& phi) {
  if (phi.empty()) return 0.0;
  const auto p = static_cast<Eigen::Index>(phi.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) c(0, i) = phi[static_cast<std::size_t>(i)];
  if (p > 1) c.bottomLeftCorner(p - 1, p - 1).setIdentity();
  return c.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double companion_radius(const std::vector<Eigen::MatrixXd>& lags) {
  if (lags.empty()) return 0.0;
  const Eigen::Index n = lags.front().rows();
  const auto p = static_cast<Eigen::Index>(lags.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * p, n * p);
  for (Eigen::Index i = 0; i < p; ++i) c.block(0, i * n, n, n) = lags[static_cast<std::size_t>(i)];
  if (p > 1) c.bottomLeftCorner(n * (p - 1), n * (p - 1)).setIdentity();
  return c.eigenvalues().cwiseAbs().maxCoeff();
}

VirusSeries simulate_virus(Eigen::Index t_n, Eigen::Index t0, const VirusPath& path, std::mt19937_64& rng) {
  if (t0 < 0 || t0 >= t_n) fail(ErrorCode::invalid_argument, "simulate_virus: T0 outside sample");
  std::normal_distribution<double> z(0.0, 1.0);
  VirusSeries out;
  out.growth = Eigen::VectorXd::Zero(t_n);
  out.level = Eigen::VectorXd::Zero(t_n);
  for (Eigen::Index t = t0 + 1; t < t_n; ++t) {
    const Eigen::Index k = t - t0;
    if (k == 1)
      out.growth(t) = path.first;
    else if (k == 2)
      out.growth(t) = path.second;
    else
      out.growth(t) = path.ar * out.growth(t - 1) + path.sd * z(rng);
    out.level(t) = path.persistence * out.level(t - 1) + out.growth(t);
  }
  return out;
}

SimulatedPanel simulate_dgp(const DgpConfig& c) {
  if (c.n < 1 || c.t_n < 2 || c.r < 1) fail(ErrorCode::invalid_argument, "simulate_dgp: empty dimensions");
  if (c.t0 < 0 || c.t0 >= c.t_n) fail(ErrorCode::invalid_argument, "simulate_dgp: T0 outside sample");
  if (!(ar_radius(c.factor_ar) < 1.0))
    fail(ErrorCode::invalid_argument, "simulate_dgp: factor autoregression is not stationary");
  if (!(std::abs(c.idio_ar) < 1.0))
    fail(ErrorCode::invalid_argument, "simulate_dgp: idiosyncratic autoregression is not stationary");
  if (c.gamma_alignment < -1.0 || c.gamma_alignment > 1.0)
    fail(ErrorCode::invalid_argument, "simulate_dgp: gamma_alignment must lie in [-1, 1]");

  std::mt19937_64 rng(c.seed);
  SimulatedPanel out;
  out.lambda = gaussian(c.n, c.r, rng);

  // Gamma = a * Lambda_1 + sqrt(1 - a^2) * noise, then masked and scaled
  const Eigen::VectorXd noise = gaussian(c.n, 1, rng).col(0);
  const double a = c.gamma_alignment;
  out.gamma = a * out.lambda.col(0) + std::sqrt(1.0 - a * a) * noise;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < c.n; ++i)
    if (u(rng) >= c.gamma_pervasive) out.gamma(i) = 0.0;
  out.gamma *= c.gamma_scale;

  const Eigen::Index total = c.t_n + c.burn_in;
  const Eigen::MatrixXd uf = gaussian(total, c.r, rng) * c.factor_sd;
  const Eigen::MatrixXd ue = gaussian(total, c.n, rng) * c.idio_sd;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(total, c.r);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(total, c.n);
  for (Eigen::Index t = 0; t < total; ++t) {
    f.row(t) = uf.row(t);
    for (std::size_t l = 0; l < c.factor_ar.size(); ++l) {
      const auto lag = static_cast<Eigen::Index>(l + 1);
      if (t >= lag) f.row(t) += c.factor_ar[l] * f.row(t - lag);
    }
    e.row(t) = ue.row(t);
    if (t > 0) e.row(t) += c.idio_ar * e.row(t - 1);
  }
  out.f = f.bottomRows(c.t_n);
  out.e = e.bottomRows(c.t_n);

  if (c.growth_override) {
    if (c.growth_override->size() != c.t_n)
      fail(ErrorCode::invalid_argument, "simulate_dgp: growth override has the wrong length");
    out.virus.growth = *c.growth_override;
    out.virus.level = Eigen::VectorXd::Zero(c.t_n);
    for (Eigen::Index t = c.t0 + 1; t < c.t_n; ++t)
      out.virus.level(t) = c.virus.persistence * out.virus.level(t - 1) + out.virus.growth(t);
  } else {
    out.virus = simulate_virus(c.t_n, c.t0, c.virus, rng);
  }

  out.x = out.f * out.lambda.transpose() + out.virus.level * out.gamma.transpose() + out.e;
  return out;
}

Eigen::MatrixXd simulate_var(const VarDgp& d, const Eigen::VectorXd& growth) {
  if (d.lags.empty()) fail(ErrorCode::invalid_argument, "simulate_var: no lag matrices");
  const Eigen::Index n = d.lags.front().rows();
  if (d.impact.rows() != n || d.impact.cols() != n) fail(ErrorCode::invalid_argument, "simulate_var: impact matrix shape");
  if (!(companion_radius(d.lags) < 1.0)) fail(ErrorCode::invalid_argument, "simulate_var: VAR is not stable");
  if (!d.injection.empty() && growth.size() != d.t_n)
    fail(ErrorCode::invalid_argument, "simulate_var: growth series has the wrong length");

  const Eigen::VectorXd c = d.intercept.size() == n ? d.intercept : Eigen::VectorXd::Zero(n);
  std::mt19937_64 rng(d.seed);
  const Eigen::Index total = d.t_n + d.burn_in;
  const Eigen::MatrixXd shocks = gaussian(total, n, rng) * d.impact.transpose();
  const auto p = static_cast<Eigen::Index>(d.lags.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(total, n);
  for (Eigen::Index t = 0; t < total; ++t) {
    Eigen::VectorXd yt = c + shocks.row(t).transpose();
    for (Eigen::Index i = 1; i <= p && i <= t; ++i) yt += d.lags[static_cast<std::size_t>(i - 1)] * y.row(t - i).transpose();
    y.row(t) = yt.transpose();
  }
  Eigen::MatrixXd out = y.bottomRows(d.t_n);
  for (std::size_t j = 0; j < d.injection.size(); ++j) {
    const auto lag = static_cast<Eigen::Index>(j);
    for (Eigen::Index t = lag; t < d.t_n; ++t) out.row(t) += growth(t - lag) * d.injection[j].transpose();
  }
  return out;
}

}  // namespace decovid
