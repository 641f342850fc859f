#pragma once

#include "common.hpp"
#include "decovid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace decovid {

struct ExogBlock {
  Eigen::MatrixXd values;  // T x m, may have zero columns
  std::vector<std::string> names;
  std::vector<std::string> warnings;
};

/// Exogenous covid regressors for a VAR-E: [D_t per model, 1{t>T0}, v lags per model].
/// Columns that are zero on the whole sample are dropped with a warning.
[[nodiscard]] ExogBlock build_exog(const DecovidSpec& spec, std::span<const double> v);

/// Reduced-form VAR(p) with optional exogenous block, estimated equation by equation.
struct VarModel {
  std::vector<std::string> variables;
  std::vector<std::string> exog_names;
  int p = 0;
  Eigen::VectorXd intercept;          // n
  std::vector<Eigen::MatrixXd> lags;  // A_1..A_p, n x n
  Eigen::MatrixXd exog_coef;          // n x m
  Eigen::MatrixXd residuals;          // (T - p) x n
  Eigen::MatrixXd sigma;              // residual covariance, T - p - k denominator
  Eigen::MatrixXd chol;               // lower-triangular impact matrix B
  Eigen::Index dof = 0;

  // sample kept for the bootstrap
  Eigen::MatrixXd y;
  Eigen::MatrixXd exog;
  std::vector<YearMonth> dates;

  [[nodiscard]] Eigen::Index n() const noexcept { return y.cols(); }
  [[nodiscard]] Eigen::Index m() const noexcept { return exog.cols(); }
};

[[nodiscard]] VarModel estimate_var(const Eigen::MatrixXd& y, int p, const Eigen::MatrixXd& exog = {},
                                    std::vector<std::string> variables = {}, std::vector<std::string> exog_names = {},
                                    std::vector<YearMonth> dates = {});

/// Lower Cholesky factor of a positive definite covariance.
[[nodiscard]] Eigen::MatrixXd cholesky_identify(const Eigen::MatrixXd& sigma);

/// Psi_0 = B, Psi_h = sum_i A_i Psi_{h-i}. Entry (r, s) of element h is the
/// response of variable r to shock s at horizon h.
[[nodiscard]] std::vector<Eigen::MatrixXd> irf(const VarModel& model, int horizon);

struct IrfBands {
  std::vector<Eigen::MatrixXd> point, lower, upper;
  double level = 0.95;
  int reps = 0;
  int failures = 0;
};

struct BootstrapOptions {
  int reps = 1000;
  double level = 0.95;
  std::uint64_t seed = 20210221;
  int threads = 0;  // 0: hardware concurrency
  int min_reps = 200;
};

/// Recursive-design residual bootstrap with percentile bands. Replication i
/// draws from derive_seed(seed, i), so results do not depend on `threads`.
[[nodiscard]] IrfBands bootstrap_irf(const VarModel& model, int horizon, const BootstrapOptions& options = {});

/// Structural shocks B^{-1} u_t, one row per residual row.
[[nodiscard]] Eigen::MatrixXd orthogonalized_shocks(const VarModel& model);

/// Dates of the residual rows (empty if the model carries none).
[[nodiscard]] std::vector<YearMonth> residual_dates(const VarModel& model);

}  // namespace decovid
