#pragma once

// Independent reference computations. They deliberately avoid the library's
// numerical paths (QR least squares, recursive IRFs, Kalman recursions) so a
// shared bug cannot make both sides agree.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// Least squares through the normal equations.
inline Eigen::MatrixXd ols_normal(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

/// Type-7 quantile of a sorted copy.
inline double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

/// Psi_h = J C^h J' B from the companion matrix C.
inline std::vector<Eigen::MatrixXd> companion_irf(const std::vector<Eigen::MatrixXd>& lags, const Eigen::MatrixXd& b,
                                                  int horizon) {
  const Eigen::Index n = b.rows();
  const auto p = static_cast<Eigen::Index>(lags.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * p, n * p);
  for (Eigen::Index i = 0; i < p; ++i) c.block(0, i * n, n, n) = lags[static_cast<std::size_t>(i)];
  if (p > 1) c.bottomLeftCorner(n * (p - 1), n * (p - 1)).setIdentity();
  std::vector<Eigen::MatrixXd> out;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n * p, n * p);
  for (int h = 0; h <= horizon; ++h) {
    out.push_back(power.topLeftCorner(n, n) * b);
    power = c * power;
  }
  return out;
}

/// Canonical correlations between the column spaces of centered a and b, descending.
inline Eigen::VectorXd canonical_correlations(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd ac = a.rowwise() - a.colwise().mean();
  const Eigen::MatrixXd bc = b.rowwise() - b.colwise().mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(ac), qb(bc);
  const Eigen::MatrixXd ua = qa.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd ub = qb.householderQ() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ua.transpose() * ub);
  return svd.singularValues();
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

/// Residuals of every column of y on [1, z].
inline Eigen::MatrixXd purge(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd x(y.rows(), 1 + z.cols());
  x.col(0).setOnes();
  x.rightCols(z.cols()) = z;
  return y - x * ols_normal(x, y);
}

/// Dense Gaussian log likelihood of the linearized log-variance model:
/// y = mu + htilde + xi, htilde stationary AR(1), xi iid with variance pi^2/2.
/// `y` is log(e^2 + c) + 1.2704 on the observed entries, `idx` their time indices.
inline double sv_dense_loglik(const std::vector<double>& y, const std::vector<int>& idx, double mu, double rho,
                              double s2) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd cov(n, n);
  const double var = s2 / (1.0 - rho * rho);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cov(i, j) = var * std::pow(rho, std::abs(idx[static_cast<std::size_t>(i)] - idx[static_cast<std::size_t>(j)]));
  cov.diagonal().array() += std::numbers::pi * std::numbers::pi / 2.0;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = y[static_cast<std::size_t>(i)] - mu;
  const Eigen::VectorXd z = llt.matrixL().solve(r);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

/// E[htilde_t | all y] for every t in 0..t_n-1, by dense Gaussian conditioning.
inline Eigen::VectorXd sv_dense_smooth(const std::vector<double>& y, const std::vector<int>& idx, int t_n, double mu,
                                       double rho, double s2) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const double var = s2 / (1.0 - rho * rho);
  auto k = [&](int a, int b) { return var * std::pow(rho, std::abs(a - b)); };
  Eigen::MatrixXd syy(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) syy(i, j) = k(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  syy.diagonal().array() += std::numbers::pi * std::numbers::pi / 2.0;
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = y[static_cast<std::size_t>(i)] - mu;
  const Eigen::VectorXd w = syy.ldlt().solve(r);
  Eigen::VectorXd out(t_n);
  for (int t = 0; t < t_n; ++t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += k(t, idx[static_cast<std::size_t>(i)]) * w(i);
    out(t) = s;
  }
  return out;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Probability that N(bias, sd^2) lands inside [-tol, tol].
inline double normal_inside(double tol, double sd, double bias = 0.0) {
  return normal_cdf((tol - bias) / sd) - normal_cdf((-tol - bias) / sd);
}

/// Pass-count floor for n Bernoulli(p) trials, three binomial sd below the mean.
inline int binomial_floor(double p, int n) {
  return static_cast<int>(std::floor(n * p - 3.0 * std::sqrt(n * p * (1.0 - p))));
}

}  // namespace oracle
