#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace decovid {

/// Principal-component factor estimates under F'F/T = I, Lambda'Lambda diagonal.
struct FactorSet {
  Eigen::MatrixXd scores;           // T x r
  Eigen::MatrixXd loadings;         // N x r
  Eigen::VectorXd variance_shares;  // r, non-increasing
  Eigen::VectorXd singular_values;  // min(T, N)
  Eigen::VectorXd means;            // standardization constants of the input
  Eigen::VectorXd sds;

  [[nodiscard]] Eigen::Index rank() const noexcept { return scores.cols(); }
  [[nodiscard]] Eigen::MatrixXd common_component() const { return scores * loadings.transpose(); }
};

/// Factors of an already standardized, complete panel. Each factor's sign is
/// chosen so its largest-magnitude loading is positive.
[[nodiscard]] FactorSet pca(const Eigen::MatrixXd& standardized, int r);

/// Standardizes with full-sample moments, then pca; the constants are kept in the result.
[[nodiscard]] FactorSet estimate_factors(const Eigen::MatrixXd& panel, int r, const std::vector<std::string>& names = {});

/// Pearson correlations corr(a_i, b_j) over the months both sets cover,
/// optionally restricted to [from, to].
[[nodiscard]] Eigen::MatrixXd factor_correlations(const Eigen::MatrixXd& a, std::span<const YearMonth> dates_a,
                                                  const Eigen::MatrixXd& b, std::span<const YearMonth> dates_b,
                                                  std::optional<YearMonth> from = std::nullopt,
                                                  std::optional<YearMonth> to = std::nullopt);

/// First principal component of the standardized element-wise square of the
/// panel, rescaled to mean 0 and sd 1.
[[nodiscard]] Eigen::VectorXd squared_panel_factor(const Eigen::MatrixXd& standardized);

}  // namespace decovid
