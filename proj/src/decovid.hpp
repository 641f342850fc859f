#pragma once

#include "common.hpp"
#include "covid.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace decovid {

enum class Estimation {
  post_sample,  // regress on rows after T0 only
  full_sample,  // all rows, with an extra 1{t > T0} level dummy
};

/// Which of the four outbreak treatments to use.
///   Model 1: March dummy, March v zeroed in every lag, no contemporaneous v,
///            series outlier-adjusted over the full sample first.
///   Model 2: March dummy, lags of v only.
///   Model 3: March dummy, contemporaneous v and lags.
///   Model 4: contemporaneous v and lags, no dummy.
struct DecovidSpec {
  int model_id = 4;
  int q = 2;
  CovidKind kind = CovidKind::positive;
  Eigen::Index t0 = 0;  // row index of the last pre-covid month
  Estimation estimation = Estimation::post_sample;
};

void validate_spec(const DecovidSpec& spec, Eigen::Index rows);

struct Design {
  Eigen::MatrixXd matrix;
  std::vector<std::string> columns;
  Eigen::Index first_row = 0;  // panel row of matrix row 0
};

/// Post-sample regressors: [1, D_t (Models 1-3), v_t (Models 3-4), v_{t-1}, ..., v_{t-q}]
/// for rows t0+1 .. T-1. `v` is aligned to the full panel (zeros before the outbreak).
[[nodiscard]] Design build_design(const DecovidSpec& spec, std::span<const double> v);

/// Full-sample variant: [1, 1{t>T0}, then the covid columns above, zero before T0].
[[nodiscard]] Design build_design_full(const DecovidSpec& spec, std::span<const double> v);

struct SeriesFit {
  double mu0 = 0.0;
  Eigen::VectorXd mu1;   // fitted covid component on post rows
  Eigen::VectorXd x;     // adjusted series, full length
  Eigen::VectorXd beta;  // one entry per design column
  std::vector<std::string> warnings;
};

/// Purges one series. `design` is either a post-sample or full-sample design
/// (distinguished by design.first_row).
[[nodiscard]] SeriesFit decovid_series(std::span<const double> series, const Design& design, Eigen::Index t0);

struct DecovidResult {
  DecovidSpec spec;
  Eigen::VectorXd mu0;    // N
  Eigen::MatrixXd mu1;    // T_post x N
  Eigen::MatrixXd x;      // T x N
  Eigen::MatrixXd betas;  // k x N
  Design design;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> outlier_mask;  // Model 1 only
  std::vector<std::string> warnings;
};

/// Replaces full-sample interquartile outliers with the pre-T0 mean (Model 1's pre-adjustment).
[[nodiscard]] std::vector<double> outlier_adjust(std::span<const double> series, Eigen::Index t0,
                                                 std::vector<bool>* flagged = nullptr);

/// Column-by-column purge; per-series failures are collected and reported together.
[[nodiscard]] DecovidResult decovid_panel(const Eigen::MatrixXd& panel, const std::vector<std::string>& names,
                                          const DecovidSpec& spec, std::span<const double> v);

}  // namespace decovid
