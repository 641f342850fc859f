#include "transform.hpp"

#include "linalg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace decovid {

int tcode_lead(int tcode) {
  switch (tcode) {
    case 1:
    case 4:
      return 0;
    case 2:
    case 5:
      return 1;
    case 3:
    case 6:
    case 7:
      return 2;
    default:
      fail(ErrorCode::invalid_argument, fmt::format("transform code {} outside 1..7", tcode));
  }
}

std::vector<double> apply_tcode(std::span<const double> series, int tcode) {
  const int lead = tcode_lead(tcode);
  const std::size_t n = series.size();
  std::vector<double> x(series.begin(), series.end());

  if (tcode >= 4 && tcode <= 6) {
    for (std::size_t t = 0; t < n; ++t) {
      if (is_missing(x[t])) continue;
      if (x[t] <= 0.0)
        fail(ErrorCode::domain, fmt::format("non-positive value {} at index {} under log transform code {}",
                                            format_double(x[t]), t, tcode));
      x[t] = std::log(x[t]);
    }
  }
  if (tcode == 7) {
    // x_t / x_{t-1} - 1 first, then one difference
    std::vector<double> g(n, kMissing);
    for (std::size_t t = 1; t < n; ++t) g[t] = x[t] / x[t - 1] - 1.0;
    x = std::move(g);
  }

  auto diff = [](const std::vector<double>& v) {
    std::vector<double> d(v.size(), kMissing);
    for (std::size_t t = 1; t < v.size(); ++t) d[t] = v[t] - v[t - 1];
    return d;
  };
  switch (tcode) {
    case 2:
    case 5:
    case 7:
      x = diff(x);
      break;
    case 3:
    case 6:
      x = diff(diff(x));
      break;
    default:
      break;
  }
  for (int t = 0; t < lead && t < static_cast<int>(n); ++t) x[static_cast<std::size_t>(t)] = kMissing;
  return x;
}

TransformedPanel transform_panel(const RawPanel& raw) {
  int lead = 0;
  for (int c : raw.tcodes) lead = std::max(lead, tcode_lead(c));
  const Eigen::Index t_out = std::max<Eigen::Index>(0, raw.rows() - lead);

  TransformedPanel out;
  out.names = raw.names;
  out.dates.assign(raw.dates.begin() + std::min<Eigen::Index>(lead, raw.rows()), raw.dates.end());
  out.values.resize(t_out, raw.cols());
  out.outlier_mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(t_out, raw.cols(), false);
  for (Eigen::Index i = 0; i < raw.cols(); ++i) {
    std::vector<double> col;
    try {
      col = apply_tcode(col_span(raw.values, i), raw.tcodes[static_cast<std::size_t>(i)]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::domain) throw;
      // name the series and month instead of the bare index
      const auto col_values = col_span(raw.values, i);
      for (std::size_t t = 0; t < col_values.size(); ++t)
        if (!is_missing(col_values[t]) && col_values[t] <= 0.0)
          fail(ErrorCode::domain, fmt::format("series {}: non-positive value {} at {} under log transform code {}",
                                              raw.names[static_cast<std::size_t>(i)], format_double(col_values[t]),
                                              raw.dates[t].iso(), raw.tcodes[static_cast<std::size_t>(i)]));
      throw;
    }
    for (Eigen::Index t = 0; t < t_out; ++t) out.values(t, i) = col[static_cast<std::size_t>(t + lead)];
  }
  return out;
}

OutlierMask detect_outliers(std::span<const double> series, RowWindow window, double multiple) {
  const auto n = static_cast<Eigen::Index>(series.size());
  const auto begin = std::clamp<Eigen::Index>(window.begin, 0, n);
  const auto end = std::max(begin, window.resolved_end(n));
  const auto sub = series.subspan(static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
  if (count_observed(sub) < 4)
    fail(ErrorCode::invalid_argument, "detect_outliers: fewer than 4 observed values in window");

  OutlierMask out;
  out.mask.assign(series.size(), false);
  const double q25 = nan_quantile(sub, 0.25);
  const double q75 = nan_quantile(sub, 0.75);
  const double median = nan_quantile(sub, 0.5);
  const double iqr = q75 - q25;
  if (!(iqr > 0.0)) {
    out.degenerate_spread = true;
    return out;
  }
  for (auto t = begin; t < end; ++t) {
    const double v = series[static_cast<std::size_t>(t)];
    if (!is_missing(v) && std::abs(v - median) > multiple * iqr) out.mask[static_cast<std::size_t>(t)] = true;
  }
  return out;
}

void remove_outliers(TransformedPanel& panel, RowWindow window, double multiple) {
  if (panel.outlier_mask.rows() != panel.values.rows() || panel.outlier_mask.cols() != panel.values.cols())
    panel.outlier_mask =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(panel.values.rows(), panel.values.cols(), false);
  for (Eigen::Index i = 0; i < panel.values.cols(); ++i) {
    const auto m = detect_outliers(col_span(panel.values, i), window, multiple);
    if (m.degenerate_spread)
      panel.warnings.push_back(fmt::format("series {}: zero interquartile range, no outliers flagged",
                                           i < static_cast<Eigen::Index>(panel.names.size()) ? panel.names[i] : std::to_string(i)));
    for (Eigen::Index t = 0; t < panel.values.rows(); ++t) {
      if (m.mask[static_cast<std::size_t>(t)]) {
        panel.outlier_mask(t, i) = true;
        panel.values(t, i) = kMissing;
      }
    }
  }
}

EmResult em_impute(const Eigen::MatrixXd& panel, const EmOptions& options) {
  const Eigen::Index t_n = panel.rows(), n = panel.cols();
  if (options.rank < 1 || options.rank >= std::min(t_n, n))
    fail(ErrorCode::invalid_argument,
         fmt::format("em_impute: rank {} must be in [1, min(T, N)) = [1, {})", options.rank, std::min(t_n, n)));

  const auto missing = panel.array().isNaN().eval();
  for (Eigen::Index i = 0; i < n; ++i)
    if (missing.col(i).all()) fail(ErrorCode::invalid_argument, fmt::format("em_impute: column {} fully missing", i));
  for (Eigen::Index t = 0; t < t_n; ++t)
    if (missing.row(t).all()) fail(ErrorCode::invalid_argument, fmt::format("em_impute: row {} fully missing", t));

  EmResult out;
  out.completed = panel;
  if (!missing.any()) {
    out.converged = true;
    out.iterations = 1;
    out.max_change.push_back(0.0);
    out.frobenius_change.push_back(0.0);
    return out;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = nan_mean(col_span(panel, i));
    for (Eigen::Index t = 0; t < t_n; ++t)
      if (missing(t, i)) out.completed(t, i) = m;
  }

  for (int it = 1; it <= options.max_iter; ++it) {
    Eigen::VectorXd mean = out.completed.colwise().mean();
    Eigen::MatrixXd centered = out.completed.rowwise() - mean.transpose();
    Eigen::VectorXd sd = (centered.colwise().squaredNorm() / static_cast<double>(t_n - 1)).cwiseSqrt();
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(sd(i) > 0.0)) sd(i) = 1.0;
    const Eigen::MatrixXd z = centered * sd.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd common = low_rank_approximation(z, options.rank);

    double max_change = 0.0, sq_change = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index t = 0; t < t_n; ++t) {
        if (!missing(t, i)) continue;
        const double updated = mean(i) + sd(i) * common(t, i);
        const double d = updated - out.completed(t, i);
        max_change = std::max(max_change, std::abs(d));
        sq_change += d * d;
        out.completed(t, i) = updated;
      }
    }
    out.iterations = it;
    out.max_change.push_back(max_change);
    out.frobenius_change.push_back(std::sqrt(sq_change));
    if (max_change < options.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Standardized standardize(const Eigen::MatrixXd& panel, const std::vector<std::string>& names, RowWindow window) {
  Standardized out;
  const Eigen::Index n = panel.cols();
  out.means.resize(n);
  out.sds.resize(n);
  out.values.resizeLike(panel);
  const auto begin = std::clamp<Eigen::Index>(window.begin, 0, panel.rows());
  const auto end = std::max(begin, window.resolved_end(panel.rows()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = col_span(panel, i).subspan(static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
    const double m = nan_mean(col);
    const double s = nan_sd(col);
    if (!(s > 0.0))
      fail(ErrorCode::domain, fmt::format("series {} has zero variance",
                                          i < static_cast<Eigen::Index>(names.size()) ? names[i] : fmt::format("#{}", i)));
    out.means(i) = m;
    out.sds(i) = s;
    out.values.col(i) = (panel.col(i).array() - m) / s;
  }
  return out;
}

Eigen::MatrixXd destandardize(const Standardized& s) {
  Eigen::MatrixXd out = s.values * s.sds.asDiagonal();
  out.rowwise() += s.means.transpose();
  return out;
}

}  // namespace decovid
