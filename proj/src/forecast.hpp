#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace decovid {

enum class PredictorMode { pre_covid, post_covid };

/// Named columns on a monthly index.
struct DatedBlock {
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows follow dates
};

/// Predictors W_t (pre-covid: macro factors, financial factors, F1^2, G) or
/// W+_t (post-covid: G replaced by the positive-case and death growth rates).
struct PredictorSet {
  PredictorMode mode = PredictorMode::post_covid;
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd values;
  int macro_factor_count = 0;
};

struct PredictorInputs {
  DatedBlock macro_factors;
  DatedBlock financial_factors;             // may have zero columns
  std::optional<DatedBlock> squared_factor; // G, pre-covid mode
  std::optional<DatedBlock> growth_positive;
  std::optional<DatedBlock> growth_death;
};

[[nodiscard]] PredictorSet build_predictors(const PredictorInputs& inputs, PredictorMode mode);

struct Screening {
  std::vector<Eigen::Index> selected;  // candidate column indices kept
  Eigen::VectorXd t_stats;             // one per candidate
};

/// Hard-threshold screening. Each candidate column is tested on its own in
/// target ~ 1 + own_lags + candidate and kept when |t| > threshold.
[[nodiscard]] Screening screen_predictors(const Eigen::VectorXd& target, const Eigen::MatrixXd& own_lags,
                                          const Eigen::MatrixXd& candidates, double threshold = 2.56);

struct ForecastOptions {
  int h = 1;
  int p_y = 4;
  int p_w = 2;
  double threshold = 2.56;
};

struct ForecastResult {
  std::vector<std::string> selected;       // lagged predictor names, e.g. "F1(-1)"
  std::vector<std::string> coefficient_names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd fitted;  // dated at t + h, NaN where undefined
  Eigen::VectorXd errors;  // dated at t + h, NaN where undefined
  Eigen::Index observations = 0;
};

/// Direct h-step regression of y_{t+h} on a constant, p_y own lags and the
/// screened lags (0..p_w-1) of the predictors. `y` shares the predictor dates.
[[nodiscard]] ForecastResult diffusion_forecast(std::span<const double> y, const PredictorSet& predictors,
                                                const ForecastOptions& options = {});

/// One-step errors of each macro factor's own forecasting equation, with the
/// other predictors as candidates. Columns follow the macro factors.
[[nodiscard]] Eigen::MatrixXd factor_errors(const PredictorSet& predictors, const ForecastOptions& options = {});

}  // namespace decovid
