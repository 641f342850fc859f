#include "factors.hpp"

#include "transform.hpp"

#include <fmt/format.h>

#include <cmath>

namespace decovid {

FactorSet pca(const Eigen::MatrixXd& x, int r) {
  const Eigen::Index t_n = x.rows(), n = x.cols();
  if (t_n == 0 || n == 0) fail(ErrorCode::invalid_argument, "pca: empty panel");
  if (x.array().isNaN().any()) fail(ErrorCode::invalid_argument, "pca: panel has missing cells; impute first");
  if (r < 1 || r > std::min(t_n, n))
    fail(ErrorCode::invalid_argument, fmt::format("pca: r={} outside [1, min(T, N)={}]", r, std::min(t_n, n)));

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = static_cast<double>(std::max(t_n, n)) * std::numeric_limits<double>::epsilon() * s(0);
  Eigen::Index numeric_rank = 0;
  while (numeric_rank < s.size() && s(numeric_rank) > tol) ++numeric_rank;
  if (r > numeric_rank)
    fail(ErrorCode::rank_deficient, fmt::format("pca: r={} exceeds the panel rank {}", r, numeric_rank));

  FactorSet out;
  out.singular_values = s;
  const double tt = static_cast<double>(t_n);
  out.scores = std::sqrt(tt) * svd.matrixU().leftCols(r);
  out.loadings = x.transpose() * out.scores / tt;
  for (int k = 0; k < r; ++k) {
    Eigen::Index imax = 0;
    out.loadings.col(k).cwiseAbs().maxCoeff(&imax);
    if (out.loadings(imax, k) < 0.0) {
      out.loadings.col(k) *= -1.0;
      out.scores.col(k) *= -1.0;
    }
  }
  const double total = s.squaredNorm();
  out.variance_shares = s.head(r).cwiseAbs2() / total;
  out.means = Eigen::VectorXd::Zero(n);
  out.sds = Eigen::VectorXd::Ones(n);
  return out;
}

FactorSet estimate_factors(const Eigen::MatrixXd& panel, int r, const std::vector<std::string>& names) {
  const auto st = standardize(panel, names);
  auto out = pca(st.values, r);
  out.means = st.means;
  out.sds = st.sds;
  return out;
}

Eigen::MatrixXd factor_correlations(const Eigen::MatrixXd& a, std::span<const YearMonth> dates_a, const Eigen::MatrixXd& b,
                                    std::span<const YearMonth> dates_b, std::optional<YearMonth> from,
                                    std::optional<YearMonth> to) {
  if (static_cast<Eigen::Index>(dates_a.size()) != a.rows() || static_cast<Eigen::Index>(dates_b.size()) != b.rows())
    fail(ErrorCode::invalid_argument, "factor_correlations: dates and rows disagree");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  for (std::size_t i = 0; i < dates_a.size(); ++i) {
    if (from && dates_a[i] < *from) continue;
    if (to && dates_a[i] > *to) continue;
    const long j = index_of(dates_b, dates_a[i]);
    if (j >= 0) rows.emplace_back(static_cast<Eigen::Index>(i), j);
  }
  if (rows.size() < 2) fail(ErrorCode::invalid_argument, "factor_correlations: empty overlap");

  Eigen::MatrixXd out(a.cols(), b.cols());
  std::vector<double> xa(rows.size()), xb(rows.size());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      for (std::size_t k = 0; k < rows.size(); ++k) {
        xa[k] = a(rows[k].first, i);
        xb[k] = b(rows[k].second, j);
      }
      out(i, j) = correlation(xa, xb);
    }
  }
  return out;
}

Eigen::VectorXd squared_panel_factor(const Eigen::MatrixXd& standardized) {
  const Eigen::MatrixXd sq = standardized.cwiseAbs2();
  const auto st = standardize(sq);
  const auto fs = pca(st.values, 1);
  Eigen::VectorXd g = fs.scores.col(0);
  const double m = g.mean();
  const double sd = std::sqrt((g.array() - m).square().sum() / static_cast<double>(g.size() - 1));
  return (g.array() - m) / sd;
}

}  // namespace decovid
