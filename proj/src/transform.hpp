#pragma once

#include "common.hpp"
#include "ingest.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace decovid {

/// Stationarity transform for one FRED-MD code:
///   1 x, 2 dx, 3 d2x, 4 log x, 5 dlog x, 6 d2log x, 7 d(x_t/x_{t-1} - 1).
/// Leading undefined entries are missing. A non-positive level under a log
/// code raises ErrorCode::domain with the offending index in the message.
[[nodiscard]] std::vector<double> apply_tcode(std::span<const double> series, int tcode);

/// Number of leading rows a code leaves undefined.
[[nodiscard]] int tcode_lead(int tcode);

struct TransformedPanel {
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // T' x N
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> outlier_mask;
  Eigen::VectorXd means;  // filled by standardization, empty before
  Eigen::VectorXd sds;
  std::vector<std::string> warnings;
};

/// Applies each column's tcode and trims the rows no code can fill.
[[nodiscard]] TransformedPanel transform_panel(const RawPanel& raw);

/// Half-open row window [begin, end).
struct RowWindow {
  Eigen::Index begin = 0;
  Eigen::Index end = -1;  // -1 = to the last row

  [[nodiscard]] Eigen::Index resolved_end(Eigen::Index n) const noexcept { return end < 0 ? n : std::min(end, n); }
};

struct OutlierMask {
  std::vector<bool> mask;
  bool degenerate_spread = false;
};

/// Flags |x_t - median| > multiple * (q75 - q25), quantiles and flags both
/// restricted to `window`. Zero interquartile range flags nothing.
[[nodiscard]] OutlierMask detect_outliers(std::span<const double> series, RowWindow window = {},
                                          double multiple = 10.0);

/// Column-wise detect_outliers; flagged cells become missing and are recorded in outlier_mask.
void remove_outliers(TransformedPanel& panel, RowWindow window = {}, double multiple = 10.0);

struct EmOptions {
  int rank = 8;
  double tol = 1e-6;
  int max_iter = 200;
};

struct EmResult {
  Eigen::MatrixXd completed;
  bool converged = false;
  int iterations = 0;
  /// max |change| over imputed cells, one entry per iteration
  std::vector<double> max_change;
  /// Frobenius norm of the change over imputed cells, one entry per iteration
  std::vector<double> frobenius_change;
};

/// EM imputation of missing cells with an r-factor common component.
/// Observed cells are returned untouched.
[[nodiscard]] EmResult em_impute(const Eigen::MatrixXd& panel, const EmOptions& options = {});

struct Standardized {
  Eigen::MatrixXd values;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;
};

/// Column-wise (x - mean) / sd over non-missing entries, n - 1 denominator.
/// A zero-variance column raises ErrorCode::domain naming the series.
[[nodiscard]] Standardized standardize(const Eigen::MatrixXd& panel, const std::vector<std::string>& names = {},
                                       RowWindow moments_window = {});
[[nodiscard]] Eigen::MatrixXd destandardize(const Standardized& s);

}  // namespace decovid
