#include "decovid.hpp"

#include "linalg.hpp"
#include "transform.hpp"

#include <fmt/format.h>

namespace decovid {

void validate_spec(const DecovidSpec& spec, Eigen::Index rows) {
  if (spec.model_id < 1 || spec.model_id > 4)
    fail(ErrorCode::config, fmt::format("model_id must be 1..4, got {}", spec.model_id));
  if (spec.q < 0) fail(ErrorCode::config, fmt::format("q must be >= 0, got {}", spec.q));
  if (spec.t0 < 0 || spec.t0 >= rows)
    fail(ErrorCode::config, fmt::format("T0 index {} outside sample of {} rows", spec.t0, rows));
}

namespace {

struct ColumnPlan {
  bool dummy;
  bool contemporaneous;
  bool zero_outbreak_lags;
};

ColumnPlan plan_for(int model_id) {
  switch (model_id) {
    case 1:
      return {true, false, true};
    case 2:
      return {true, false, false};
    case 3:
      return {true, true, false};
    default:
      return {false, true, false};
  }
}

// Fills covid columns (dummy, v_t, lags) for panel row t, starting at `col`.
void covid_columns(const DecovidSpec& spec, std::span<const double> v, Eigen::Index t, Eigen::MatrixXd& m,
                   Eigen::Index row, Eigen::Index col) {
  const auto plan = plan_for(spec.model_id);
  const Eigen::Index outbreak = spec.t0 + 1;
  auto value = [&](Eigen::Index s) {
    const double x = v[static_cast<std::size_t>(s)];
    if (is_missing(x)) fail(ErrorCode::invalid_argument, fmt::format("covid growth undefined at row {}", s));
    return x;
  };
  if (plan.dummy) m(row, col++) = t == outbreak ? 1.0 : 0.0;
  if (plan.contemporaneous) m(row, col++) = t > spec.t0 ? value(t) : 0.0;
  for (int j = 1; j <= spec.q; ++j) {
    const Eigen::Index s = t - j;
    double x = s > spec.t0 ? value(s) : 0.0;
    if (plan.zero_outbreak_lags && s == outbreak) x = 0.0;
    m(row, col++) = x;
  }
}

std::vector<std::string> covid_column_names(const DecovidSpec& spec) {
  const auto plan = plan_for(spec.model_id);
  std::vector<std::string> names;
  if (plan.dummy) names.emplace_back("D");
  if (plan.contemporaneous) names.emplace_back("v_t");
  for (int j = 1; j <= spec.q; ++j) names.push_back(fmt::format("v_t-{}", j));
  return names;
}

void check_history(const DecovidSpec& spec, std::span<const double> v) {
  const auto rows = static_cast<Eigen::Index>(v.size());
  validate_spec(spec, rows);
  if (spec.t0 + 1 >= rows) fail(ErrorCode::invalid_argument, "no post-T0 rows in sample");
  if (spec.q > spec.t0 + 1)
    fail(ErrorCode::invalid_argument,
         fmt::format("q={} lags exceed the {} rows of history before the outbreak", spec.q, spec.t0 + 1));
}

}  // namespace

Design build_design(const DecovidSpec& spec, std::span<const double> v) {
  check_history(spec, v);
  const auto rows = static_cast<Eigen::Index>(v.size());
  Design d;
  d.columns.emplace_back("const");
  for (auto& c : covid_column_names(spec)) d.columns.push_back(std::move(c));
  d.first_row = spec.t0 + 1;
  d.matrix.resize(rows - d.first_row, static_cast<Eigen::Index>(d.columns.size()));
  for (Eigen::Index t = d.first_row; t < rows; ++t) {
    const Eigen::Index r = t - d.first_row;
    d.matrix(r, 0) = 1.0;
    covid_columns(spec, v, t, d.matrix, r, 1);
  }
  return d;
}

Design build_design_full(const DecovidSpec& spec, std::span<const double> v) {
  check_history(spec, v);
  const auto rows = static_cast<Eigen::Index>(v.size());
  Design d;
  d.columns = {"const", "post"};
  for (auto& c : covid_column_names(spec)) d.columns.push_back(std::move(c));
  d.first_row = 0;
  d.matrix.resize(rows, static_cast<Eigen::Index>(d.columns.size()));
  for (Eigen::Index t = 0; t < rows; ++t) {
    d.matrix(t, 0) = 1.0;
    d.matrix(t, 1) = t > spec.t0 ? 1.0 : 0.0;
    covid_columns(spec, v, t, d.matrix, t, 2);
  }
  return d;
}

SeriesFit decovid_series(std::span<const double> series, const Design& design, Eigen::Index t0) {
  const auto rows = static_cast<Eigen::Index>(series.size());
  if (design.first_row + design.matrix.rows() != rows)
    fail(ErrorCode::invalid_argument, "decovid_series: design rows do not match the series");
  if (t0 < 0 || t0 + 1 >= rows) fail(ErrorCode::invalid_argument, "decovid_series: T0 outside sample");

  SeriesFit out;
  const Eigen::Index k = design.matrix.cols();
  out.beta = Eigen::VectorXd::Zero(k);

  // observed rows of the regression sample
  std::vector<Eigen::Index> obs;
  for (Eigen::Index r = 0; r < design.matrix.rows(); ++r)
    if (!is_missing(series[static_cast<std::size_t>(r + design.first_row)])) obs.push_back(r);

  bool all_zero = true;
  for (auto r : obs) {
    if (r + design.first_row > t0 && series[static_cast<std::size_t>(r + design.first_row)] != 0.0) all_zero = false;
  }
  const bool full = design.first_row == 0;

  if (!(all_zero && !full)) {
    // active columns: drop regressors that are identically zero on the sample
    std::vector<Eigen::Index> active;
    for (Eigen::Index c = 0; c < k; ++c) {
      bool nonzero = false;
      for (auto r : obs) nonzero = nonzero || design.matrix(r, c) != 0.0;
      if (nonzero)
        active.push_back(c);
      else
        out.warnings.push_back(fmt::format("regressor {} is identically zero; coefficient fixed at 0", design.columns[c]));
    }
    if (static_cast<Eigen::Index>(obs.size()) < static_cast<Eigen::Index>(active.size()))
      fail(ErrorCode::invalid_argument, fmt::format("{} observed rows for {} regressors", obs.size(), active.size()));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(obs.size()), static_cast<Eigen::Index>(active.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(obs.size()));
    std::vector<std::string> names;
    for (auto c : active) names.push_back(design.columns[c]);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = series[static_cast<std::size_t>(obs[i] + design.first_row)];
      for (std::size_t j = 0; j < active.size(); ++j)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = design.matrix(obs[i], active[j]);
    }
    if (!active.empty()) {
      const auto fit = ols(x, y, names);
      for (std::size_t j = 0; j < active.size(); ++j) out.beta(active[j]) = fit.coef(static_cast<Eigen::Index>(j), 0);
    }
  }

  const Eigen::VectorXd fitted = design.matrix * out.beta;
  const Eigen::Index post_rows = rows - (t0 + 1);
  out.mu1 = fitted.tail(post_rows);
  if (full) {
    out.mu0 = out.beta(0);
  } else {
    out.mu0 = nan_mean(series.subspan(0, static_cast<std::size_t>(t0 + 1)));
  }
  out.x.resize(rows);
  for (Eigen::Index t = 0; t < rows; ++t) {
    const double v = series[static_cast<std::size_t>(t)];
    out.x(t) = t <= t0 ? v - out.mu0 : v - out.mu1(t - t0 - 1);
  }
  return out;
}

std::vector<double> outlier_adjust(std::span<const double> series, Eigen::Index t0, std::vector<bool>* flagged) {
  std::vector<double> out(series.begin(), series.end());
  if (count_observed(series) < 4) return out;
  const auto mask = detect_outliers(series);
  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index t = 0; t <= t0 && t < static_cast<Eigen::Index>(series.size()); ++t) {
    const double v = series[static_cast<std::size_t>(t)];
    if (!is_missing(v) && !mask.mask[static_cast<std::size_t>(t)]) {
      sum += v;
      ++n;
    }
  }
  const double pre_mean = n > 0 ? sum / static_cast<double>(n) : kMissing;
  for (std::size_t t = 0; t < out.size(); ++t)
    if (mask.mask[t]) out[t] = pre_mean;
  if (flagged) *flagged = mask.mask;
  return out;
}

DecovidResult decovid_panel(const Eigen::MatrixXd& panel, const std::vector<std::string>& names,
                            const DecovidSpec& spec, std::span<const double> v) {
  const Eigen::Index rows = panel.rows(), n = panel.cols();
  if (static_cast<Eigen::Index>(v.size()) != rows)
    fail(ErrorCode::invalid_argument, "decovid_panel: covid series and panel differ in length");

  DecovidResult out;
  out.spec = spec;
  out.design = spec.estimation == Estimation::post_sample ? build_design(spec, v) : build_design_full(spec, v);
  const Eigen::Index post = rows - spec.t0 - 1;
  const Eigen::Index k = out.design.matrix.cols();
  out.mu0 = Eigen::VectorXd::Zero(n);
  out.mu1 = Eigen::MatrixXd::Zero(post, n);
  out.x = Eigen::MatrixXd::Constant(rows, n, kMissing);
  out.betas = Eigen::MatrixXd::Zero(k, n);
  out.outlier_mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, n, false);

  auto name_of = [&](Eigen::Index i) {
    return i < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(i)] : fmt::format("#{}", i);
  };

  std::string errors;
  ErrorCode first_code = ErrorCode::internal;
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      std::vector<double> series(col_span(panel, i).begin(), col_span(panel, i).end());
      if (spec.model_id == 1) {
        std::vector<bool> flagged;
        series = outlier_adjust(series, spec.t0, &flagged);
        for (std::size_t t = 0; t < flagged.size(); ++t) out.outlier_mask(static_cast<Eigen::Index>(t), i) = flagged[t];
      }
      auto fit = decovid_series(series, out.design, spec.t0);
      out.mu0(i) = fit.mu0;
      out.mu1.col(i) = fit.mu1;
      out.x.col(i) = fit.x;
      out.betas.col(i) = fit.beta;
      for (auto& w : fit.warnings) out.warnings.push_back(name_of(i) + ": " + w);
    } catch (const Error& e) {
      if (errors.empty()) first_code = e.code();
      errors += fmt::format("{}{}: {}", errors.empty() ? "" : "; ", name_of(i), e.what());
    }
  }
  if (!errors.empty()) fail(first_code, "decovid failed for " + errors);
  return out;
}

}  // namespace decovid
