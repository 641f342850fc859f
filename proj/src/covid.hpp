#pragma once

#include "common.hpp"
#include "ingest.hpp"

#include <string_view>
#include <vector>

namespace decovid {

enum class CovidKind { hospitalized, positive, death };

[[nodiscard]] char kind_letter(CovidKind kind) noexcept;
/// "H", "P", "D" (case-insensitive).
[[nodiscard]] CovidKind parse_kind(std::string_view text);

struct MonthlyLevels {
  CovidKind kind = CovidKind::positive;
  std::vector<YearMonth> months;
  std::vector<double> levels;  // V
};

struct CovidIndicator {
  CovidKind kind = CovidKind::positive;
  YearMonth outbreak;
  std::vector<YearMonth> months;
  std::vector<double> levels;  // V
  std::vector<double> growth;  // v, NaN where undefined
};

/// Calendar-month sums of the daily increments; months without rows are 0.
[[nodiscard]] MonthlyLevels aggregate_monthly(const DailyCovidSeries& daily, CovidKind kind);

/// v_t = log(V_t / V_{t-1}) from `outbreak` on, 0 before it. For H a zero
/// level in the month before the first positive month is read as 1.
[[nodiscard]] CovidIndicator growth_rate(const MonthlyLevels& levels, YearMonth outbreak);

/// v on an arbitrary monthly index: 0 before the outbreak, NaN after the
/// indicator's last month.
[[nodiscard]] std::vector<double> align_growth(const CovidIndicator& indicator, std::span<const YearMonth> dates);

}  // namespace decovid
