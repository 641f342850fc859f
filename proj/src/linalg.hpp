#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace decovid {

struct OlsFit {
  Eigen::MatrixXd coef;       // k x m (one column per response)
  Eigen::MatrixXd residuals;  // n x m
  Eigen::MatrixXd xtx_inv;    // k x k
  Eigen::Index dof = 0;       // n - k

  /// Residual variance of response `j` with the n - k denominator.
  [[nodiscard]] double sigma2(Eigen::Index j = 0) const;
  [[nodiscard]] Eigen::VectorXd std_errors(Eigen::Index j = 0) const;
  [[nodiscard]] Eigen::VectorXd t_stats(Eigen::Index j = 0) const;
};

/// Column indices that are linearly dependent on earlier pivots, empty when
/// `x` has full column rank.
[[nodiscard]] std::vector<Eigen::Index> dependent_columns(const Eigen::MatrixXd& x);

/// Least squares of every column of `y` on `x`. A rank-deficient `x` raises
/// ErrorCode::rank_deficient naming the offending columns via `names` when given.
[[nodiscard]] OlsFit ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const std::vector<std::string>& names = {});

/// Best rank-r approximation (truncated SVD) of a complete matrix.
[[nodiscard]] Eigen::MatrixXd low_rank_approximation(const Eigen::MatrixXd& x, Eigen::Index rank);

}  // namespace decovid
