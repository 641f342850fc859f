#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace decovid {

enum class ErrorCode {
  invalid_argument,
  format,
  domain,
  rank_deficient,
  not_found,
  convergence,
  config,
  internal,
};

/// Every failure inside the core is reported through this type; the C API
/// maps `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

[[nodiscard]] inline bool is_missing(double x) noexcept { return x != x; }

/// Calendar month. Ordering and arithmetic go through the month ordinal.
struct YearMonth {
  int year = 1970;
  int month = 1;

  [[nodiscard]] int ordinal() const noexcept { return year * 12 + (month - 1); }
  [[nodiscard]] static YearMonth from_ordinal(int ord) noexcept {
    return {ord >= 0 ? ord / 12 : (ord - 11) / 12, ((ord % 12) + 12) % 12 + 1};
  }
  [[nodiscard]] YearMonth plus(int months) const noexcept { return from_ordinal(ordinal() + months); }
  [[nodiscard]] std::string iso() const;

  friend bool operator==(const YearMonth&, const YearMonth&) = default;
  friend auto operator<=>(const YearMonth& a, const YearMonth& b) noexcept {
    return a.ordinal() <=> b.ordinal();
  }
};

/// Accepts "yyyy-mm", "yyyy-mm-dd", "m/d/yyyy" and "yyyy:mm".
[[nodiscard]] YearMonth parse_year_month(std::string_view text);

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  [[nodiscard]] YearMonth year_month() const noexcept { return {year, month}; }
  [[nodiscard]] std::string iso() const;

  friend bool operator==(const Date&, const Date&) = default;
  friend auto operator<=>(const Date&, const Date&) = default;
};

/// Accepts "yyyy-mm-dd", "yyyymmdd" and "m/d/yyyy".
[[nodiscard]] Date parse_date(std::string_view text);

/// Consecutive monthly dates starting at `first`.
[[nodiscard]] std::vector<YearMonth> month_range(YearMonth first, std::size_t count);

/// Index of `month` in a consecutive monthly index, or -1.
[[nodiscard]] long index_of(std::span<const YearMonth> dates, YearMonth month) noexcept;

// Descriptive statistics over the non-missing entries.
[[nodiscard]] double nan_mean(std::span<const double> x);
[[nodiscard]] double nan_sd(std::span<const double> x);  // n - 1 denominator
[[nodiscard]] std::size_t count_observed(std::span<const double> x) noexcept;

/// Linear-interpolation quantile (Hyndman-Fan type 7) of the non-missing values.
[[nodiscard]] double nan_quantile(std::span<const double> x, double p);

[[nodiscard]] double correlation(std::span<const double> a, std::span<const double> b);

[[nodiscard]] inline std::span<const double> col_span(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}
[[nodiscard]] inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// SplitMix64 step; used to derive independent per-replication seeds from a master seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

}  // namespace decovid
