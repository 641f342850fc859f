#include "ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace decovid {

long RawPanel::column(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<long>(i);
  return -1;
}

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  // trailing empty lines carry no rows
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string strip(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool is_missing_marker(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

bool all_blank(const std::vector<std::string>& cells) {
  return std::all_of(cells.begin(), cells.end(), [](const std::string& c) { return strip(c).empty(); });
}

}  // namespace

std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string format_double(double x) {
  if (is_missing(x)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

FredMdParse parse_fredmd(std::string_view csv) {
  const auto lines = lines_of(csv);
  if (lines.size() < 2) fail(ErrorCode::format, "FRED-MD: expected a header row and a Transform row");

  const auto header = split_csv_row(lines[0]);
  if (header.size() < 2) fail(ErrorCode::format, "FRED-MD: malformed header (no series columns)");
  const std::size_t n = header.size() - 1;

  FredMdParse out;
  auto& panel = out.panel;
  for (std::size_t i = 1; i < header.size(); ++i) {
    auto name = strip(header[i]);
    if (name.empty()) fail(ErrorCode::format, fmt::format("FRED-MD: malformed header (empty name in column {})", i + 1));
    panel.names.push_back(std::move(name));
  }

  const auto tline = split_csv_row(lines[1]);
  {
    auto marker = strip(tline.empty() ? std::string{} : tline[0]);
    std::transform(marker.begin(), marker.end(), marker.begin(), [](unsigned char c) { return std::tolower(c); });
    if (marker.rfind("transform", 0) != 0)
      fail(ErrorCode::format, "FRED-MD: second row must start with the 'Transform:' marker");
  }
  if (tline.size() != header.size())
    fail(ErrorCode::format, fmt::format("FRED-MD: Transform row has {} cells, header has {}", tline.size(), header.size()));
  for (std::size_t i = 1; i < tline.size(); ++i) {
    const auto cell = strip(tline[i]);
    int code = 0;
    double as_double = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), code);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
      // "5.0" style codes are accepted when integral
      if (!parse_number(cell, as_double) || as_double != static_cast<int>(as_double))
        fail(ErrorCode::format, fmt::format("FRED-MD: non-integer transform code '{}' for {}", cell, panel.names[i - 1]));
      code = static_cast<int>(as_double);
    }
    if (code < 1 || code > 7)
      fail(ErrorCode::format, fmt::format("FRED-MD: transform code {} for {} outside 1..7", code, panel.names[i - 1]));
    panel.tcodes.push_back(code);
  }

  std::vector<std::vector<double>> rows;
  for (std::size_t li = 2; li < lines.size(); ++li) {
    ++out.report.data_rows;
    auto cells = split_csv_row(lines[li]);
    const auto date_cell = strip(cells.empty() ? std::string{} : cells[0]);
    if (date_cell.empty()) {
      out.report.row_errors.push_back(fmt::format("line {}: {} row without a date", li + 1,
                                                  all_blank(cells) ? "blank" : "data"));
      continue;
    }
    const YearMonth month = parse_year_month(date_cell);
    if (cells.size() != header.size())
      fail(ErrorCode::format, fmt::format("FRED-MD line {}: {} cells, expected {}", li + 1, cells.size(), header.size()));
    if (!panel.dates.empty()) {
      if (month == panel.dates.back() || month < panel.dates.back())
        fail(ErrorCode::format, fmt::format("FRED-MD line {}: duplicate or out-of-order month {}", li + 1, month.iso()));
      if (month != panel.dates.back().plus(1))
        fail(ErrorCode::format, fmt::format("FRED-MD line {}: gap before month {}", li + 1, month.iso()));
    }
    std::vector<double> row(n, kMissing);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cell = strip(cells[i + 1]);
      if (is_missing_marker(cell)) continue;
      if (!parse_number(cell, row[i]))
        fail(ErrorCode::format, fmt::format("FRED-MD line {}: non-numeric value '{}' for {}", li + 1, cell, panel.names[i]));
    }
    panel.dates.push_back(month);
    rows.push_back(std::move(row));
  }

  panel.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < n; ++i) panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t][i];
  return out;
}

CovidParse parse_covid_tracking(std::string_view csv) {
  const auto lines = lines_of(csv);
  if (lines.empty()) fail(ErrorCode::format, "covid CSV: empty input");
  const auto header = split_csv_row(lines[0]);
  auto find = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (strip(header[i]) == name) return i;
    fail(ErrorCode::format, fmt::format("covid CSV: required column '{}' absent", name));
  };
  const std::size_t c_date = find("date");
  const std::size_t c_hosp = find("hospitalizedIncrease");
  const std::size_t c_pos = find("positiveIncrease");
  const std::size_t c_death = find("deathIncrease");

  struct Row {
    Date date;
    double h, p, d;
  };
  std::vector<Row> rows;
  CovidParse out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    ++out.report.data_rows;
    const auto cells = split_csv_row(lines[li]);
    const auto date_cell = c_date < cells.size() ? strip(cells[c_date]) : std::string{};
    if (date_cell.empty()) {
      out.report.row_errors.push_back(fmt::format("line {}: row without a date", li + 1));
      continue;
    }
    Row row{parse_date(date_cell), 0, 0, 0};
    auto read = [&](std::size_t col, const char* what) {
      const auto cell = col < cells.size() ? strip(cells[col]) : std::string{};
      if (is_missing_marker(cell)) return 0.0;
      double v = 0;
      if (!parse_number(cell, v))
        fail(ErrorCode::format, fmt::format("covid CSV line {}: non-numeric {} '{}'", li + 1, what, cell));
      if (v < 0) {
        out.report.warnings.push_back(
            fmt::format("{}: negative {} {} clamped to 0", row.date.iso(), what, format_double(v)));
        v = 0;
      }
      return v;
    };
    row.h = read(c_hosp, "hospitalizedIncrease");
    row.p = read(c_pos, "positiveIncrease");
    row.d = read(c_death, "deathIncrease");
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].date == rows[i - 1].date)
      fail(ErrorCode::format, fmt::format("covid CSV: duplicate date {}", rows[i].date.iso()));

  for (const auto& r : rows) {
    out.series.dates.push_back(r.date);
    out.series.hospitalized.push_back(r.h);
    out.series.positive.push_back(r.p);
    out.series.death.push_back(r.d);
  }
  return out;
}

void validate_panel(const RawPanel& panel, std::size_t min_observed) {
  if (panel.tcodes.size() != panel.names.size() || static_cast<Eigen::Index>(panel.names.size()) != panel.cols())
    fail(ErrorCode::format, "panel: names, tcodes and columns disagree in length");
  if (static_cast<Eigen::Index>(panel.dates.size()) != panel.rows())
    fail(ErrorCode::format, "panel: dates and rows disagree in length");
  for (std::size_t t = 1; t < panel.dates.size(); ++t)
    if (panel.dates[t] != panel.dates[t - 1].plus(1))
      fail(ErrorCode::format, fmt::format("panel: dates not consecutive at {}", panel.dates[t].iso()));
  for (Eigen::Index i = 0; i < panel.cols(); ++i) {
    const auto obs = count_observed(col_span(panel.values, i));
    if (obs < min_observed)
      fail(ErrorCode::format,
           fmt::format("panel: series {} has {} observations, need {}", panel.names[i], obs, min_observed));
  }
}

std::string to_fredmd_csv(const RawPanel& panel) {
  std::string out = "sasdate";
  for (const auto& n : panel.names) out += "," + n;
  out += "\nTransform:";
  for (int c : panel.tcodes) out += "," + std::to_string(c);
  out += "\n";
  for (Eigen::Index t = 0; t < panel.rows(); ++t) {
    const auto& d = panel.dates[static_cast<std::size_t>(t)];
    out += fmt::format("{}/1/{}", d.month, d.year);
    for (Eigen::Index i = 0; i < panel.cols(); ++i) out += "," + format_double(panel.values(t, i));
    out += "\n";
  }
  return out;
}

std::string to_covid_csv(const DailyCovidSeries& s) {
  std::string out = "date,hospitalizedIncrease,positiveIncrease,deathIncrease\n";
  for (std::size_t i = 0; i < s.dates.size(); ++i)
    out += fmt::format("{},{},{},{}\n", s.dates[i].iso(), format_double(s.hospitalized[i]),
                       format_double(s.positive[i]), format_double(s.death[i]));
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, fmt::format("file not found: {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace decovid
