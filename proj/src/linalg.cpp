#include "linalg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace decovid {

double OlsFit::sigma2(Eigen::Index j) const {
  if (dof <= 0) return kMissing;
  return residuals.col(j).squaredNorm() / static_cast<double>(dof);
}

Eigen::VectorXd OlsFit::std_errors(Eigen::Index j) const {
  return (xtx_inv.diagonal() * sigma2(j)).cwiseSqrt();
}

Eigen::VectorXd OlsFit::t_stats(Eigen::Index j) const {
  return coef.col(j).cwiseQuotient(std_errors(j));
}

std::vector<Eigen::Index> dependent_columns(const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = rank; i < x.cols(); ++i) out.push_back(qr.colsPermutation().indices()(i));
  std::sort(out.begin(), out.end());
  return out;
}

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<std::string>& names) {
  if (x.rows() != y.rows()) fail(ErrorCode::invalid_argument, "ols: row mismatch");
  if (x.rows() < x.cols())
    fail(ErrorCode::invalid_argument,
         fmt::format("ols: {} observations for {} regressors", x.rows(), x.cols()));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    std::string cols;
    for (auto c : dependent_columns(x)) {
      if (!cols.empty()) cols += ", ";
      cols += c < static_cast<Eigen::Index>(names.size()) ? names[c] : fmt::format("#{}", c);
    }
    fail(ErrorCode::rank_deficient, fmt::format("collinear regressors: {}", cols));
  }

  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.residuals = y - x * fit.coef;
  fit.dof = x.rows() - x.cols();

  // (X'X)^{-1} = P R^{-1} R^{-T} P'
  const Eigen::Index k = x.cols();
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd inner = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.xtx_inv = perm * inner * perm.transpose();
  return fit;
}

Eigen::MatrixXd low_rank_approximation(const Eigen::MatrixXd& x, Eigen::Index rank) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto r = std::min<Eigen::Index>(rank, svd.singularValues().size());
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

}  // namespace decovid
