#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace decovid {

/// Monthly panel as it arrives on disk: untransformed levels, missing cells NaN.
struct RawPanel {
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  std::vector<int> tcodes;
  Eigen::MatrixXd values;  // T x N

  [[nodiscard]] Eigen::Index rows() const noexcept { return values.rows(); }
  [[nodiscard]] Eigen::Index cols() const noexcept { return values.cols(); }
  /// Column index of `name`, or -1.
  [[nodiscard]] long column(std::string_view name) const noexcept;
};

struct DailyCovidSeries {
  std::vector<Date> dates;
  std::vector<double> hospitalized;
  std::vector<double> positive;
  std::vector<double> death;
};

/// Rows that could not be used are listed in `row_errors`, never dropped silently:
/// data_rows == parsed rows + row_errors.size().
struct ParseReport {
  std::size_t data_rows = 0;
  std::vector<std::string> row_errors;
  std::vector<std::string> warnings;
};

struct FredMdParse {
  RawPanel panel;
  ParseReport report;
};

struct CovidParse {
  DailyCovidSeries series;
  ParseReport report;
};

/// Header row, then a "Transform:" row of integer codes, then one row per month.
/// Empty, "NA" and "NaN" cells are missing.
[[nodiscard]] FredMdParse parse_fredmd(std::string_view csv);

/// covidtracking national-history layout. Columns are located by name; rows
/// are returned in ascending date order, blank counts read as 0 and negative
/// increments are clamped to 0 with a warning.
[[nodiscard]] CovidParse parse_covid_tracking(std::string_view csv);

/// Throws unless every column has at least `min_observed` non-missing entries.
void validate_panel(const RawPanel& panel, std::size_t min_observed = 24);

/// Shortest round-trip formatting, so parse(to_fredmd_csv(p)) is bit-exact.
[[nodiscard]] std::string to_fredmd_csv(const RawPanel& panel);
[[nodiscard]] std::string to_covid_csv(const DailyCovidSeries& series);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Comma split honouring double quotes; used by both readers.
[[nodiscard]] std::vector<std::string> split_csv_row(std::string_view line);

[[nodiscard]] std::string format_double(double x);

}  // namespace decovid
