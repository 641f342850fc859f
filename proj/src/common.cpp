#include "common.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace decovid {

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

std::string YearMonth::iso() const { return fmt::format("{:04d}-{:02d}", year, month); }

std::string Date::iso() const { return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day); }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool to_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

bool valid_ymd(int y, int m, int d) {
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (y < 1000 || y > 9999 || m < 1 || m > 12 || d < 1) return false;
  if (d > kDays[m - 1]) return false;
  if (m == 2 && d == 29) return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return true;
}

}  // namespace

Date parse_date(std::string_view text) {
  const auto s = trim(text);
  int y = 0, m = 0, d = 0;
  bool ok = false;
  if (s.find('-') != std::string_view::npos) {
    auto p = split(s, '-');
    ok = p.size() == 3 && to_int(p[0], y) && to_int(p[1], m) && to_int(p[2], d);
  } else if (s.find('/') != std::string_view::npos) {
    auto p = split(s, '/');
    ok = p.size() == 3 && to_int(p[0], m) && to_int(p[1], d) && to_int(p[2], y);
  } else if (s.size() == 8) {
    ok = to_int(s.substr(0, 4), y) && to_int(s.substr(4, 2), m) && to_int(s.substr(6, 2), d);
  }
  if (!ok || !valid_ymd(y, m, d)) fail(ErrorCode::format, fmt::format("unparseable date '{}'", s));
  return {y, m, d};
}

YearMonth parse_year_month(std::string_view text) {
  const auto s = trim(text);
  int y = 0, m = 0;
  if (s.size() == 7 && (s[4] == '-' || s[4] == ':')) {
    if (to_int(s.substr(0, 4), y) && to_int(s.substr(5, 2), m) && m >= 1 && m <= 12) return {y, m};
    fail(ErrorCode::format, fmt::format("unparseable month '{}'", s));
  }
  return parse_date(s).year_month();
}

std::vector<YearMonth> month_range(YearMonth first, std::size_t count) {
  std::vector<YearMonth> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(first.plus(static_cast<int>(i)));
  return out;
}

long index_of(std::span<const YearMonth> dates, YearMonth month) noexcept {
  if (dates.empty()) return -1;
  const long off = month.ordinal() - dates.front().ordinal();
  if (off < 0 || off >= static_cast<long>(dates.size()) || dates[off] != month) return -1;
  return off;
}

std::size_t count_observed(std::span<const double> x) noexcept {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return !is_missing(v); }));
}

double nan_mean(std::span<const double> x) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : x) {
    if (!is_missing(v)) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? kMissing : sum / static_cast<double>(n);
}

double nan_sd(std::span<const double> x) {
  const double m = nan_mean(x);
  double ss = 0.0;
  std::size_t n = 0;
  for (double v : x) {
    if (!is_missing(v)) {
      ss += (v - m) * (v - m);
      ++n;
    }
  }
  return n < 2 ? kMissing : std::sqrt(ss / static_cast<double>(n - 1));
}

double nan_quantile(std::span<const double> x, double p) {
  std::vector<double> v;
  v.reserve(x.size());
  for (double e : x)
    if (!is_missing(e)) v.push_back(e);
  if (v.empty()) return kMissing;
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::invalid_argument, "correlation: length mismatch");
  double ma = 0, mb = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    ma += a[i];
    mb += b[i];
    ++n;
  }
  if (n < 2) return kMissing;
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kMissing;
  return sab / std::sqrt(saa * sbb);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace decovid
