#include "covid.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>

namespace decovid {

char kind_letter(CovidKind kind) noexcept {
  switch (kind) {
    case CovidKind::hospitalized:
      return 'H';
    case CovidKind::positive:
      return 'P';
    case CovidKind::death:
      return 'D';
  }
  return '?';
}

CovidKind parse_kind(std::string_view text) {
  if (text.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(text[0]))) {
      case 'H':
        return CovidKind::hospitalized;
      case 'P':
        return CovidKind::positive;
      case 'D':
        return CovidKind::death;
      default:
        break;
    }
  }
  fail(ErrorCode::config, fmt::format("covid kind must be H, P or D, got '{}'", text));
}

MonthlyLevels aggregate_monthly(const DailyCovidSeries& daily, CovidKind kind) {
  if (daily.dates.empty()) fail(ErrorCode::invalid_argument, "aggregate_monthly: empty daily series");
  const auto& counts = kind == CovidKind::hospitalized ? daily.hospitalized
                       : kind == CovidKind::positive   ? daily.positive
                                                       : daily.death;
  const YearMonth first = daily.dates.front().year_month();
  const YearMonth last = daily.dates.back().year_month();
  MonthlyLevels out;
  out.kind = kind;
  out.months = month_range(first, static_cast<std::size_t>(last.ordinal() - first.ordinal() + 1));
  out.levels.assign(out.months.size(), 0.0);
  for (std::size_t i = 0; i < daily.dates.size(); ++i)
    out.levels[static_cast<std::size_t>(daily.dates[i].year_month().ordinal() - first.ordinal())] += counts[i];
  return out;
}

CovidIndicator growth_rate(const MonthlyLevels& levels, YearMonth outbreak) {
  CovidIndicator out;
  out.kind = levels.kind;
  out.outbreak = outbreak;
  out.months = levels.months;
  out.levels = levels.levels;
  out.growth.assign(levels.months.size(), kMissing);

  std::vector<double> base = levels.levels;
  if (levels.kind == CovidKind::hospitalized) {
    for (std::size_t t = 1; t < base.size(); ++t) {
      if (levels.months[t] < outbreak) continue;
      if (base[t] > 0.0) {
        if (base[t - 1] == 0.0) base[t - 1] = 1.0;
        break;
      }
    }
  }
  for (std::size_t t = 0; t < base.size(); ++t) {
    if (levels.months[t] < outbreak) {
      out.growth[t] = 0.0;
      continue;
    }
    if (t == 0) continue;
    if (base[t - 1] > 0.0 && base[t] > 0.0) out.growth[t] = std::log(base[t] / base[t - 1]);
  }
  return out;
}

std::vector<double> align_growth(const CovidIndicator& indicator, std::span<const YearMonth> dates) {
  std::vector<double> v(dates.size(), kMissing);
  for (std::size_t t = 0; t < dates.size(); ++t) {
    if (dates[t] < indicator.outbreak) {
      v[t] = 0.0;
      continue;
    }
    const long k = index_of(indicator.months, dates[t]);
    if (k >= 0) v[t] = indicator.growth[static_cast<std::size_t>(k)];
  }
  return v;
}

}  // namespace decovid
