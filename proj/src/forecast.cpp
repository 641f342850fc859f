#include "forecast.hpp"

#include "linalg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace decovid {

namespace {

void append_block(PredictorSet& set, const DatedBlock& block, const char* what) {
  if (block.values.cols() == 0) return;
  if (block.dates != set.dates)
    fail(ErrorCode::invalid_argument, fmt::format("build_predictors: {} dates do not match the macro factors", what));
  if (block.values.rows() != static_cast<Eigen::Index>(block.dates.size()))
    fail(ErrorCode::invalid_argument, fmt::format("build_predictors: {} rows and dates disagree", what));
  const Eigen::Index old = set.values.cols();
  set.values.conservativeResize(Eigen::NoChange, old + block.values.cols());
  set.values.rightCols(block.values.cols()) = block.values;
  for (Eigen::Index j = 0; j < block.values.cols(); ++j)
    set.names.push_back(j < static_cast<Eigen::Index>(block.names.size()) ? block.names[j]
                                                                          : fmt::format("{}{}", what, j + 1));
}

}  // namespace

PredictorSet build_predictors(const PredictorInputs& in, PredictorMode mode) {
  PredictorSet set;
  set.mode = mode;
  set.dates = in.macro_factors.dates;
  const Eigen::Index t_n = static_cast<Eigen::Index>(set.dates.size());
  if (in.macro_factors.values.rows() != t_n || in.macro_factors.values.cols() == 0)
    fail(ErrorCode::invalid_argument, "build_predictors: macro factors missing or misaligned");
  set.values.resize(t_n, 0);
  set.macro_factor_count = static_cast<int>(in.macro_factors.values.cols());

  append_block(set, in.macro_factors, "F");
  append_block(set, in.financial_factors, "Ff");
  DatedBlock sq{set.dates, {"F1sq"}, in.macro_factors.values.col(0).cwiseAbs2()};
  append_block(set, sq, "F1sq");

  if (mode == PredictorMode::pre_covid) {
    if (!in.squared_factor) fail(ErrorCode::invalid_argument, "build_predictors: pre-covid mode needs G");
    append_block(set, *in.squared_factor, "G");
  } else {
    if (!in.growth_positive || !in.growth_death)
      fail(ErrorCode::invalid_argument, "build_predictors: post-covid mode needs both positive and death growth");
    append_block(set, *in.growth_positive, "vP");
    append_block(set, *in.growth_death, "vD");
  }
  return set;
}

Screening screen_predictors(const Eigen::VectorXd& target, const Eigen::MatrixXd& own_lags,
                            const Eigen::MatrixXd& candidates, double threshold) {
  if (!(threshold > 0.0)) fail(ErrorCode::invalid_argument, "screen_predictors: threshold must be positive");
  const Eigen::Index n = target.size();
  if (own_lags.rows() != n || candidates.rows() != n)
    fail(ErrorCode::invalid_argument, "screen_predictors: row mismatch");
  const Eigen::Index k = 1 + own_lags.cols() + 1;
  if (n <= k)
    fail(ErrorCode::invalid_argument, fmt::format("screen_predictors: {} observations for {} regressors", n, k));

  Screening out;
  out.t_stats = Eigen::VectorXd::Zero(candidates.cols());
  Eigen::MatrixXd x(n, k);
  x.col(0).setOnes();
  x.middleCols(1, own_lags.cols()) = own_lags;
  for (Eigen::Index c = 0; c < candidates.cols(); ++c) {
    x.col(k - 1) = candidates.col(c);
    try {
      const auto fit = ols(x, target);
      out.t_stats(c) = fit.t_stats()(k - 1);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::rank_deficient) throw;
      out.t_stats(c) = 0.0;  // candidate spanned by the AR block carries no information
    }
    if (std::abs(out.t_stats(c)) > threshold) out.selected.push_back(c);
  }
  return out;
}

ForecastResult diffusion_forecast(std::span<const double> y, const PredictorSet& predictors,
                                  const ForecastOptions& options) {
  if (options.h < 1 || options.p_y < 1 || options.p_w < 1)
    fail(ErrorCode::invalid_argument, "diffusion_forecast: h, p_y and p_w must be >= 1");
  const auto t_n = static_cast<Eigen::Index>(y.size());
  if (predictors.values.rows() != t_n)
    fail(ErrorCode::invalid_argument, "diffusion_forecast: target and predictors differ in length");

  const Eigen::Index kw = predictors.values.cols();
  const int lag_max = std::max(options.p_y, options.p_w) - 1;

  // rows t with y_{t+h}, own lags and every predictor lag observed
  std::vector<Eigen::Index> rows;
  for (Eigen::Index t = lag_max; t + options.h < t_n; ++t) {
    bool ok = !is_missing(y[static_cast<std::size_t>(t + options.h)]);
    for (int l = 0; ok && l < options.p_y; ++l) ok = !is_missing(y[static_cast<std::size_t>(t - l)]);
    for (int l = 0; ok && l < options.p_w; ++l)
      for (Eigen::Index c = 0; ok && c < kw; ++c) ok = !is_missing(predictors.values(t - l, c));
    if (ok) rows.push_back(t);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd target(n);
  Eigen::MatrixXd own(n, options.p_y);
  Eigen::MatrixXd cand(n, kw * options.p_w);
  std::vector<std::string> cand_names;
  for (int l = 0; l < options.p_w; ++l)
    for (Eigen::Index c = 0; c < kw; ++c)
      cand_names.push_back(l == 0 ? predictors.names[c] : fmt::format("{}(-{})", predictors.names[c], l));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index t = rows[i];
    target(i) = y[static_cast<std::size_t>(t + options.h)];
    for (int l = 0; l < options.p_y; ++l) own(i, l) = y[static_cast<std::size_t>(t - l)];
    for (int l = 0; l < options.p_w; ++l)
      for (Eigen::Index c = 0; c < kw; ++c) cand(i, l * kw + c) = predictors.values(t - l, c);
  }

  const auto screening = screen_predictors(target, own, cand, options.threshold);

  ForecastResult out;
  const Eigen::Index k = 1 + options.p_y + static_cast<Eigen::Index>(screening.selected.size());
  if (n <= k) fail(ErrorCode::invalid_argument, fmt::format("diffusion_forecast: {} observations for {} regressors", n, k));
  Eigen::MatrixXd x(n, k);
  x.col(0).setOnes();
  x.middleCols(1, options.p_y) = own;
  out.coefficient_names.emplace_back("const");
  for (int l = 0; l < options.p_y; ++l) out.coefficient_names.push_back(l == 0 ? "y" : fmt::format("y(-{})", l));
  for (std::size_t s = 0; s < screening.selected.size(); ++s) {
    x.col(1 + options.p_y + static_cast<Eigen::Index>(s)) = cand.col(screening.selected[s]);
    out.selected.push_back(cand_names[static_cast<std::size_t>(screening.selected[s])]);
    out.coefficient_names.push_back(out.selected.back());
  }
  // two screened columns can still be jointly collinear (e.g. identical growth series)
  auto dep = dependent_columns(x);
  if (!dep.empty()) {
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < k; ++j)
      if (std::find(dep.begin(), dep.end(), j) == dep.end() || j <= options.p_y) kept.push_back(j);
    Eigen::MatrixXd xr(n, static_cast<Eigen::Index>(kept.size()));
    std::vector<std::string> names, sel;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      xr.col(static_cast<Eigen::Index>(j)) = x.col(kept[j]);
      names.push_back(out.coefficient_names[static_cast<std::size_t>(kept[j])]);
      if (kept[j] > options.p_y) sel.push_back(out.coefficient_names[static_cast<std::size_t>(kept[j])]);
    }
    x = std::move(xr);
    out.coefficient_names = std::move(names);
    out.selected = std::move(sel);
  }
  const auto fit = ols(x, target, out.coefficient_names);
  out.coefficients = fit.coef.col(0);
  out.t_stats = fit.t_stats();
  out.observations = n;
  out.fitted = Eigen::VectorXd::Constant(t_n, kMissing);
  out.errors = Eigen::VectorXd::Constant(t_n, kMissing);
  const Eigen::VectorXd fitted = x * out.coefficients;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.fitted(rows[i] + options.h) = fitted(i);
    out.errors(rows[i] + options.h) = fit.residuals(i, 0);
  }
  return out;
}

Eigen::MatrixXd factor_errors(const PredictorSet& predictors, const ForecastOptions& options) {
  const Eigen::Index t_n = predictors.values.rows();
  Eigen::MatrixXd out(t_n, predictors.macro_factor_count);
  for (int k = 0; k < predictors.macro_factor_count; ++k) {
    PredictorSet others;
    others.mode = predictors.mode;
    others.dates = predictors.dates;
    others.values.resize(t_n, predictors.values.cols() - 1);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < predictors.values.cols(); ++j) {
      if (j == k) continue;
      others.values.col(c++) = predictors.values.col(j);
      others.names.push_back(predictors.names[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd f = predictors.values.col(k);
    out.col(k) = diffusion_forecast(as_span(f), others, options).errors;
  }
  return out;
}

}  // namespace decovid
