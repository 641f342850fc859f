#include "pipeline.hpp"

#include "factors.hpp"
#include "forecast.hpp"
#include "ingest.hpp"
#include "output.hpp"
#include "synthetic.hpp"
#include "transform.hpp"
#include "uncertainty.hpp"
#include "var.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace decovid {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto s = trim(value);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec != std::errc{} || ptr != end || s.empty())
    fail(ErrorCode::config, fmt::format("config {}: cannot parse '{}'", key, value));
  return out;
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

YearMonth parse_month_value(const std::string& key, const std::string& value) {
  try {
    return parse_year_month(trim(value));
  } catch (const Error&) {
    fail(ErrorCode::config, fmt::format("config {}: cannot parse month '{}'", key, value));
  }
}

}  // namespace

void set_config_value(PipelineConfig& c, const std::string& raw_key, const std::string& value) {
  std::string key = trim(raw_key);
  for (auto& ch : key)
    if (ch == '-') ch = '_';
  const std::string v = trim(value);
  if (key == "macro_csv") c.macro_csv = v;
  else if (key == "financial_csv") c.financial_csv = v;
  else if (key == "covid_csv") c.covid_csv = v;
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "model_id") c.model_id = parse_number<int>(key, v);
  else if (key == "kind") {
    try {
      c.kind = parse_kind(v);
    } catch (const Error&) {
      fail(ErrorCode::config, fmt::format("config kind: expected H, P or D, got '{}'", v));
    }
  } else if (key == "q") c.q = parse_number<int>(key, v);
  else if (key == "estimation") {
    if (v == "post") c.estimation = Estimation::post_sample;
    else if (v == "full") c.estimation = Estimation::full_sample;
    else fail(ErrorCode::config, fmt::format("config estimation: expected post or full, got '{}'", v));
  } else if (key == "t0") c.t0 = parse_month_value(key, v);
  else if (key == "r_m") c.r_m = parse_number<int>(key, v);
  else if (key == "r_f") c.r_f = parse_number<int>(key, v);
  else if (key == "em_rank") c.em_rank = parse_number<int>(key, v);
  else if (key == "em_tol") c.em_tol = parse_number<double>(key, v);
  else if (key == "em_max_iter") c.em_max_iter = parse_number<int>(key, v);
  else if (key == "predictor_mode") {
    if (v != "post" && v != "pre") fail(ErrorCode::config, fmt::format("config predictor_mode: expected post or pre, got '{}'", v));
    c.predictor_mode = v;
  } else if (key == "forecast_horizon") c.forecast_horizon = parse_number<int>(key, v);
  else if (key == "p_y") c.p_y = parse_number<int>(key, v);
  else if (key == "p_w") c.p_w = parse_number<int>(key, v);
  else if (key == "screen_threshold") c.screen_threshold = parse_number<double>(key, v);
  else if (key == "p") c.p = parse_number<int>(key, v);
  else if (key == "horizon") c.horizon = parse_number<int>(key, v);
  else if (key == "reps") c.reps = parse_number<int>(key, v);
  else if (key == "level") c.level = parse_number<double>(key, v);
  else if (key == "threads") c.threads = parse_number<int>(key, v);
  else if (key == "var_series") c.var_series = parse_list(v);
  else if (key == "var_log") c.var_log = parse_list(v);
  else if (key == "var_start") c.var_start = parse_month_value(key, v);
  else if (key == "var_pre_end") c.var_pre_end = parse_month_value(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "sim_n") c.sim_n = parse_number<int>(key, v);
  else if (key == "sim_t") c.sim_t = parse_number<int>(key, v);
  else if (key == "sim_r") c.sim_r = parse_number<int>(key, v);
  else if (key == "sim_start") c.sim_start = parse_month_value(key, v);
  else fail(ErrorCode::config, fmt::format("unknown config key '{}'", raw_key));
}

void load_config_file(PipelineConfig& c, const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::config, fmt::format("{}:{}: expected key = value", path.string(), lineno));
    set_config_value(c, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_environment(PipelineConfig& c) {
  if (const char* dir = std::getenv("DECOVID_OUTPUT_DIR"); dir != nullptr && *dir != '\0') c.output_dir = dir;
}

std::map<std::string, std::string> config_echo(const PipelineConfig& c) {
  return {
      {"macro_csv", c.macro_csv},
      {"financial_csv", c.financial_csv},
      {"covid_csv", c.covid_csv},
      {"output_dir", c.output_dir},
      {"model_id", std::to_string(c.model_id)},
      {"kind", std::string(1, kind_letter(c.kind))},
      {"q", std::to_string(c.q)},
      {"estimation", c.estimation == Estimation::post_sample ? "post" : "full"},
      {"t0", c.t0.iso()},
      {"r_m", std::to_string(c.r_m)},
      {"r_f", std::to_string(c.r_f)},
      {"em_rank", std::to_string(c.em_rank)},
      {"em_tol", format_double(c.em_tol)},
      {"em_max_iter", std::to_string(c.em_max_iter)},
      {"predictor_mode", c.predictor_mode},
      {"forecast_horizon", std::to_string(c.forecast_horizon)},
      {"p_y", std::to_string(c.p_y)},
      {"p_w", std::to_string(c.p_w)},
      {"screen_threshold", format_double(c.screen_threshold)},
      {"p", std::to_string(c.p)},
      {"horizon", std::to_string(c.horizon)},
      {"reps", std::to_string(c.reps)},
      {"level", format_double(c.level)},
      {"threads", std::to_string(c.threads)},
      {"var_series", join(c.var_series)},
      {"var_log", join(c.var_log)},
      {"var_start", c.var_start.iso()},
      {"var_pre_end", c.var_pre_end.iso()},
      {"seed", std::to_string(c.seed)},
      {"sim_n", std::to_string(c.sim_n)},
      {"sim_t", std::to_string(c.sim_t)},
      {"sim_r", std::to_string(c.sim_r)},
      {"sim_start", c.sim_start.iso()},
  };
}

void validate_config(const PipelineConfig& c, const std::string& command) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorCode::config, msg);
  };
  if (command == "simulate") {
    require(c.sim_n >= 1 && c.sim_t >= 2 && c.sim_r >= 1, "sim_n, sim_t and sim_r must be positive");
    return;
  }
  require(!c.macro_csv.empty(), "macro_csv is required");
  require(!c.covid_csv.empty(), "covid_csv is required");
  require(c.model_id >= 1 && c.model_id <= 4, fmt::format("model_id must be 1..4, got {}", c.model_id));
  require(c.q >= 0, fmt::format("q must be >= 0, got {}", c.q));
  if (command == "factors" || command == "forecast" || command == "uncertainty") {
    require(c.r_m >= 1, fmt::format("r_m must be >= 1, got {}", c.r_m));
    require(c.r_f >= 0, fmt::format("r_f must be >= 0, got {}", c.r_f));
    require(c.em_rank >= 0 && c.em_max_iter >= 1 && c.em_tol > 0.0, "EM settings out of range");
  }
  if (command == "forecast" || command == "uncertainty") {
    require(c.forecast_horizon >= 1 && c.p_y >= 1 && c.p_w >= 1, "forecast_horizon, p_y and p_w must be >= 1");
    require(c.screen_threshold > 0.0, "screen_threshold must be positive");
  }
  if (command == "var") {
    require(c.p >= 1, fmt::format("p must be >= 1, got {}", c.p));
    require(c.horizon >= 0, fmt::format("horizon must be >= 0, got {}", c.horizon));
    require(c.reps >= 200, fmt::format("reps must be >= 200, got {}", c.reps));
    require(c.level > 0.0 && c.level < 1.0, "level must lie in (0, 1)");
    require(!c.var_series.empty(), "var_series is empty");
    require(c.var_pre_end < c.t0.plus(1), "var_pre_end must precede the outbreak month");
  }
}

// ---------------------------------------------------------------- data preparation

namespace {

CovidIndicator load_indicator(const DailyCovidSeries& daily, CovidKind kind, YearMonth t0) {
  return growth_rate(aggregate_monthly(daily, kind), t0.plus(1));
}

struct CovidInputs {
  DailyCovidSeries daily;
  std::vector<std::string> warnings;
};

CovidInputs load_covid(const PipelineConfig& c) {
  auto parsed = parse_covid_tracking(read_text_file(c.covid_csv));
  CovidInputs out{std::move(parsed.series), std::move(parsed.report.warnings)};
  for (auto& e : parsed.report.row_errors) out.warnings.push_back("covid: " + e);
  if (out.daily.dates.empty()) fail(ErrorCode::format, fmt::format("{}: no covid rows", c.covid_csv));
  return out;
}

struct MacroData {
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd X;  // transformed, pre-window outliers removed (Models 2-4)
  Eigen::Index t0 = 0;
  std::vector<double> v;
  DailyCovidSeries daily;
  std::vector<std::string> warnings;
};

// Rows in [first, last] of a transformed panel that carry at least one observation.
void trim_empty_rows(TransformedPanel& p) {
  Eigen::Index b = 0, e = p.values.rows();
  auto empty = [&](Eigen::Index t) { return p.values.row(t).array().isNaN().all(); };
  while (b < e && empty(b)) ++b;
  while (e > b && empty(e - 1)) --e;
  if (b == 0 && e == p.values.rows()) return;
  p.values = p.values.middleRows(b, e - b).eval();
  p.dates = std::vector<YearMonth>(p.dates.begin() + b, p.dates.begin() + e);
}

MacroData load_macro(const PipelineConfig& c) {
  MacroData m;
  auto parsed = parse_fredmd(read_text_file(c.macro_csv));
  for (auto& e : parsed.report.row_errors) m.warnings.push_back("macro: " + e);
  if (parsed.panel.cols() == 0 || parsed.panel.rows() == 0)
    fail(ErrorCode::invalid_argument, fmt::format("{}: empty panel", c.macro_csv));
  validate_panel(parsed.panel);
  auto tp = transform_panel(parsed.panel);
  for (auto& w : tp.warnings) m.warnings.push_back(w);

  auto covid = load_covid(c);
  for (auto& w : covid.warnings) m.warnings.push_back(w);
  const auto ind = load_indicator(covid.daily, c.kind, c.t0);

  // sample ends with the last month the covid indicator covers
  const YearMonth last = ind.months.back();
  Eigen::Index keep = 0;
  while (keep < static_cast<Eigen::Index>(tp.dates.size()) && tp.dates[static_cast<std::size_t>(keep)] <= last) ++keep;
  if (keep < static_cast<Eigen::Index>(tp.dates.size())) {
    m.warnings.push_back(fmt::format("sample truncated at {}, the last covid month", last.iso()));
    tp.values = tp.values.topRows(keep).eval();
    tp.dates.resize(static_cast<std::size_t>(keep));
  }
  trim_empty_rows(tp);
  tp.outlier_mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(tp.values.rows(), tp.values.cols(), false);

  const long t0 = index_of(tp.dates, c.t0);
  if (t0 < 0) fail(ErrorCode::config, fmt::format("T0 {} is not in the macro sample", c.t0.iso()));
  if (t0 + 1 >= static_cast<long>(tp.dates.size()))
    fail(ErrorCode::config, fmt::format("no months after T0 {} in the sample", c.t0.iso()));
  if (c.model_id != 1) remove_outliers(tp, RowWindow{0, t0 + 1});

  m.dates = tp.dates;
  m.names = tp.names;
  m.X = std::move(tp.values);
  m.t0 = t0;
  m.v = align_growth(ind, m.dates);
  m.daily = std::move(covid.daily);
  return m;
}

EmOptions em_options(const PipelineConfig& c, const Eigen::MatrixXd& panel) {
  EmOptions o;
  const Eigen::Index cap = std::min(panel.rows(), panel.cols()) - 1;
  o.rank = static_cast<int>(std::clamp<Eigen::Index>(c.em_rank > 0 ? c.em_rank : c.r_m, 1, std::max<Eigen::Index>(cap, 1)));
  o.tol = c.em_tol;
  o.max_iter = c.em_max_iter;
  return o;
}

Eigen::MatrixXd impute(const PipelineConfig& c, const Eigen::MatrixXd& panel, std::vector<std::string>& warnings,
                       const char* what) {
  if (!panel.array().isNaN().any()) return panel;
  auto em = em_impute(panel, em_options(c, panel));
  if (!em.converged)
    warnings.push_back(fmt::format("{}: EM stopped after {} iterations without converging", what, em.iterations));
  return std::move(em.completed);
}

struct DecovidData {
  MacroData m;
  DecovidResult res;
  Eigen::MatrixXd x_filled;
  Eigen::MatrixXd X_filled;  // x_filled plus the removed means
};

DecovidData prepare_decovid(const PipelineConfig& c) {
  DecovidData d;
  d.m = load_macro(c);
  DecovidSpec spec;
  spec.model_id = c.model_id;
  spec.q = c.q;
  spec.kind = c.kind;
  spec.t0 = d.m.t0;
  spec.estimation = c.estimation;
  d.res = decovid_panel(d.m.X, d.m.names, spec, d.m.v);
  for (auto& w : d.res.warnings) d.m.warnings.push_back(w);
  d.x_filled = impute(c, d.res.x, d.m.warnings, "de-covid panel");
  d.X_filled = d.x_filled;
  const Eigen::Index t0 = d.m.t0;
  for (Eigen::Index j = 0; j < d.X_filled.cols(); ++j) {
    d.X_filled.col(j).head(t0 + 1).array() += d.res.mu0(j);
    d.X_filled.col(j).tail(d.X_filled.rows() - t0 - 1) += d.res.mu1.col(j);
  }
  return d;
}

std::vector<std::string> numbered(const char* prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(fmt::format("{}{}", prefix, i + 1));
  return out;
}

// Financial factors on the macro dates; empty when no financial panel is configured.
DatedBlock financial_factors(const PipelineConfig& c, const std::vector<YearMonth>& dates, Eigen::Index t0,
                             std::vector<std::string>& warnings) {
  DatedBlock out{dates, {}, Eigen::MatrixXd(static_cast<Eigen::Index>(dates.size()), 0)};
  if (c.financial_csv.empty() || c.r_f == 0) return out;
  auto parsed = parse_fredmd(read_text_file(c.financial_csv));
  validate_panel(parsed.panel);
  auto tp = transform_panel(parsed.panel);
  remove_outliers(tp, RowWindow{0, index_of(tp.dates, c.t0) + 1});
  Eigen::MatrixXd f = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(dates.size()), tp.values.cols(), kMissing);
  for (std::size_t t = 0; t < dates.size(); ++t) {
    const long r = index_of(tp.dates, dates[t]);
    if (r < 0) fail(ErrorCode::invalid_argument, fmt::format("financial panel has no row for {}", dates[t].iso()));
    f.row(static_cast<Eigen::Index>(t)) = tp.values.row(r);
  }
  (void)t0;
  const auto filled = impute(c, f, warnings, "financial panel");
  const auto fs = estimate_factors(filled, c.r_f, tp.names);
  out.names = numbered("Ff", c.r_f);
  out.values = fs.scores;
  return out;
}

DatedBlock growth_block(const DailyCovidSeries& daily, CovidKind kind, YearMonth t0, const std::vector<YearMonth>& dates,
                        const char* name) {
  const auto g = align_growth(load_indicator(daily, kind, t0), dates);
  DatedBlock b{dates, {name}, Eigen::MatrixXd(static_cast<Eigen::Index>(dates.size()), 1)};
  for (std::size_t t = 0; t < g.size(); ++t) b.values(static_cast<Eigen::Index>(t), 0) = g[t];
  return b;
}

ForecastOptions forecast_options(const PipelineConfig& c) {
  return {c.forecast_horizon, c.p_y, c.p_w, c.screen_threshold};
}

PredictorSet post_predictors(const PipelineConfig& c, const DecovidData& d, std::vector<std::string>& warnings) {
  const auto fs = estimate_factors(d.x_filled, c.r_m, d.m.names);
  PredictorInputs in;
  in.macro_factors = {d.m.dates, numbered("F", c.r_m), fs.scores};
  in.financial_factors = financial_factors(c, d.m.dates, d.m.t0, warnings);
  in.growth_positive = growth_block(d.m.daily, CovidKind::positive, c.t0, d.m.dates, "vP");
  in.growth_death = growth_block(d.m.daily, CovidKind::death, c.t0, d.m.dates, "vD");
  return build_predictors(in, PredictorMode::post_covid);
}

fs::path out_path(const PipelineConfig& c, const char* file) { return fs::path(c.output_dir) / file; }

void finish(const PipelineConfig& c, const std::string& command, RunResult& r) {
  const auto manifest = out_path(c, "manifest.json");
  write_manifest(manifest, command, config_echo(c), c.seed, r.files);
  r.files.push_back(manifest);
}

std::vector<YearMonth> slice(const std::vector<YearMonth>& d, Eigen::Index from, Eigen::Index count) {
  return {d.begin() + from, d.begin() + from + count};
}

}  // namespace

// ---------------------------------------------------------------- subcommands

RunResult run_decovid(const PipelineConfig& c) {
  validate_config(c, "decovid");
  RunResult r;
  auto d = prepare_decovid(c);
  r.warnings = d.m.warnings;
  const Eigen::Index post = d.res.mu1.rows();
  r.files.push_back(out_path(c, "mu1.csv"));
  write_dated_csv(r.files.back(), slice(d.m.dates, d.m.t0 + 1, post), d.m.names, d.res.mu1);
  r.files.push_back(out_path(c, "x_panel.csv"));
  write_dated_csv(r.files.back(), d.m.dates, d.m.names, d.res.x);
  finish(c, "decovid", r);
  return r;
}

RunResult run_factors(const PipelineConfig& c) {
  validate_config(c, "factors");
  RunResult r;
  auto d = prepare_decovid(c);
  const auto post = estimate_factors(d.x_filled, c.r_m, d.m.names);

  // factors of the pre-covid sample of the unadjusted panel
  const Eigen::Index t0 = d.m.t0;
  const Eigen::MatrixXd pre_panel = impute(c, d.m.X.topRows(t0 + 1), d.m.warnings, "pre-covid panel");
  const auto pre = estimate_factors(pre_panel, c.r_m, d.m.names);
  const auto pre_dates = slice(d.m.dates, 0, t0 + 1);
  const auto corr = factor_correlations(post.scores, d.m.dates, pre.scores, pre_dates);
  r.warnings = d.m.warnings;

  const auto names = numbered("F", c.r_m);
  r.files.push_back(out_path(c, "factors.csv"));
  write_dated_csv(r.files.back(), d.m.dates, names, post.scores);

  std::vector<std::vector<std::string>> shares;
  for (int k = 0; k < c.r_m; ++k) shares.push_back({names[static_cast<std::size_t>(k)], format_double(post.variance_shares(k))});
  r.files.push_back(out_path(c, "variance_shares.csv"));
  write_table_csv(r.files.back(), {"factor", "share"}, shares);

  std::vector<std::string> header{"factor"};
  for (const auto& n : names) header.push_back("pre_" + n);
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < c.r_m; ++i) {
    std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
    for (int j = 0; j < c.r_m; ++j) row.push_back(format_double(corr(i, j)));
    rows.push_back(std::move(row));
  }
  r.files.push_back(out_path(c, "correlations.csv"));
  write_table_csv(r.files.back(), header, rows);
  finish(c, "factors", r);
  return r;
}

RunResult run_forecast(const PipelineConfig& c) {
  validate_config(c, "forecast");
  RunResult r;
  auto d = prepare_decovid(c);
  const Eigen::Index t0 = d.m.t0;
  const RowWindow pre_window{0, t0 + 1};

  PredictorSet predictors;
  Eigen::MatrixXd targets;
  std::vector<YearMonth> dates;
  if (c.predictor_mode == "pre") {
    dates = slice(d.m.dates, 0, t0 + 1);
    const Eigen::MatrixXd pre_panel = impute(c, d.m.X.topRows(t0 + 1), d.m.warnings, "pre-covid panel");
    const auto st = standardize(pre_panel, d.m.names);
    const auto fs = pca(st.values, c.r_m);
    PredictorInputs in;
    in.macro_factors = {dates, numbered("F", c.r_m), fs.scores};
    in.financial_factors = financial_factors(c, dates, t0, d.m.warnings);
    in.squared_factor = DatedBlock{dates, {"G"}, squared_panel_factor(st.values)};
    predictors = build_predictors(in, PredictorMode::pre_covid);
    targets = st.values;
  } else {
    dates = d.m.dates;
    predictors = post_predictors(c, d, d.m.warnings);
    targets = standardize(d.x_filled, d.m.names, pre_window).values;
  }
  const auto opts = forecast_options(c);

  Eigen::MatrixXd errors(targets.rows(), targets.cols());
  std::vector<std::vector<std::string>> selected;
  for (Eigen::Index j = 0; j < targets.cols(); ++j) {
    const auto& name = d.m.names[static_cast<std::size_t>(j)];
    try {
      const auto fc = diffusion_forecast(col_span(targets, j), predictors, opts);
      errors.col(j) = fc.errors;
      selected.push_back({name, std::to_string(fc.selected.size()), join(fc.selected, ";")});
    } catch (const Error& e) {
      fail(e.code(), fmt::format("forecast for {}: {}", name, e.what()));
    }
  }
  const Eigen::MatrixXd ferr = factor_errors(predictors, opts);
  r.warnings = d.m.warnings;

  r.files.push_back(out_path(c, "forecast_errors.csv"));
  write_dated_csv(r.files.back(), dates, d.m.names, errors);
  r.files.push_back(out_path(c, "selected_predictors.csv"));
  write_table_csv(r.files.back(), {"series", "count", "selected"}, selected);
  r.files.push_back(out_path(c, "factor_errors.csv"));
  write_dated_csv(r.files.back(), dates, numbered("F", c.r_m), ferr);
  finish(c, "forecast", r);
  return r;
}

RunResult run_uncertainty(const PipelineConfig& c) {
  validate_config(c, "uncertainty");
  RunResult r;
  auto d = prepare_decovid(c);
  const RowWindow pre_window{0, d.m.t0 + 1};
  const auto predictors = post_predictors(c, d, d.m.warnings);
  const auto opts = forecast_options(c);

  const auto targets_raw = standardize(d.X_filled, d.m.names, pre_window).values;
  const auto targets_adj = standardize(d.x_filled, d.m.names, pre_window).values;
  const auto u_raw = compute_uncertainty("U(X)", targets_raw, d.m.names, predictors, opts);
  const auto u_adj = compute_uncertainty("U(x)", targets_adj, d.m.names, predictors, opts);
  for (const auto* run : {&u_raw, &u_adj})
    for (std::size_t j = 0; j < run->fits.size(); ++j)
      if (!run->fits[j].converged)
        d.m.warnings.push_back(fmt::format("{}: SV fit for {} did not converge", run->index.label, d.m.names[j]));
  r.warnings = d.m.warnings;

  auto write_index = [&](const UncertaintyRun& run, const char* file) {
    Eigen::MatrixXd m(run.index.aggregate.size(), 2);
    m.col(0) = run.index.aggregate;
    m.col(1) = run.index.standardized();
    r.files.push_back(out_path(c, file));
    write_dated_csv(r.files.back(), run.index.dates, {"U", "U_std"}, m);
  };
  write_index(u_raw, "U_X.csv");
  write_index(u_adj, "U_x.csv");
  const Eigen::MatrixXd diff = covid_uncertainty(u_raw.index, u_adj.index);
  r.files.push_back(out_path(c, "covid_U.csv"));
  write_dated_csv(r.files.back(), u_raw.index.dates, {"covid_U"}, diff);
  finish(c, "uncertainty", r);
  return r;
}

namespace {

struct VarSample {
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd y;
  std::vector<double> v;
  Eigen::Index t0 = 0;
};

VarSample load_var_sample(const PipelineConfig& c, std::vector<std::string>& warnings) {
  auto parsed = parse_fredmd(read_text_file(c.macro_csv));
  const auto& raw = parsed.panel;
  auto covid = load_covid(c);
  for (auto& w : covid.warnings) warnings.push_back(w);
  const auto ind = load_indicator(covid.daily, c.kind, c.t0);

  const long first = index_of(raw.dates, c.var_start);
  if (first < 0) fail(ErrorCode::config, fmt::format("var_start {} is not in the macro sample", c.var_start.iso()));
  long last = static_cast<long>(raw.dates.size()) - 1;
  while (last >= first && raw.dates[static_cast<std::size_t>(last)] > ind.months.back()) --last;

  std::vector<long> cols;
  for (const auto& s : c.var_series) {
    const long j = raw.column(s);
    if (j < 0) fail(ErrorCode::config, fmt::format("VAR series {} not found in {}", s, c.macro_csv));
    cols.push_back(j);
  }
  // drop trailing months where any VAR series is still unreleased
  auto complete = [&](long t) {
    for (long j : cols)
      if (is_missing(raw.values(t, j))) return false;
    return true;
  };
  while (last >= first && !complete(last)) --last;

  VarSample s;
  s.names = c.var_series;
  s.dates.assign(raw.dates.begin() + first, raw.dates.begin() + last + 1);
  const Eigen::Index t_n = last - first + 1;
  s.y.resize(t_n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const bool take_log = std::find(c.var_log.begin(), c.var_log.end(), c.var_series[k]) != c.var_log.end();
    for (Eigen::Index t = 0; t < t_n; ++t) {
      const double x = raw.values(first + t, cols[k]);
      const auto& when = s.dates[static_cast<std::size_t>(t)];
      if (is_missing(x)) fail(ErrorCode::invalid_argument, fmt::format("VAR series {} missing at {}", c.var_series[k], when.iso()));
      if (take_log && !(x > 0.0))
        fail(ErrorCode::domain, fmt::format("VAR series {} is not positive at {}; cannot take logs", c.var_series[k], when.iso()));
      s.y(t, static_cast<Eigen::Index>(k)) = take_log ? std::log(x) : x;
    }
  }
  const long t0 = index_of(s.dates, c.t0);
  if (t0 < 0 || t0 + 1 >= t_n) fail(ErrorCode::config, fmt::format("T0 {} leaves no post-covid VAR sample", c.t0.iso()));
  s.t0 = t0;
  s.v = align_growth(ind, s.dates);
  return s;
}

void irf_rows(const std::string& model, const VarModel& m, const std::vector<Eigen::MatrixXd>& psi,
              std::vector<std::vector<std::string>>& rows) {
  for (std::size_t h = 0; h < psi.size(); ++h)
    for (Eigen::Index s = 0; s < psi[h].cols(); ++s)
      for (Eigen::Index v = 0; v < psi[h].rows(); ++v)
        rows.push_back({std::to_string(h), model, m.variables[static_cast<std::size_t>(s)],
                        m.variables[static_cast<std::size_t>(v)], format_double(psi[h](v, s))});
}

}  // namespace

RunResult run_var(const PipelineConfig& c) {
  validate_config(c, "var");
  RunResult r;
  const auto s = load_var_sample(c, r.warnings);
  const long pre_end = index_of(s.dates, c.var_pre_end);
  if (pre_end < 0) fail(ErrorCode::config, fmt::format("var_pre_end {} is not in the VAR sample", c.var_pre_end.iso()));

  const auto pre_dates = slice(s.dates, 0, pre_end + 1);
  const VarModel pre = estimate_var(s.y.topRows(pre_end + 1), c.p, {}, s.names, {}, pre_dates);

  std::vector<std::pair<std::string, VarModel>> models;
  models.emplace_back("M0", estimate_var(s.y, c.p, {}, s.names, {}, s.dates));
  for (int id = 1; id <= 4; ++id) {
    DecovidSpec spec;
    spec.model_id = id;
    spec.q = c.q;
    spec.kind = c.kind;
    spec.t0 = s.t0;
    auto exog = build_exog(spec, s.v);
    for (auto& w : exog.warnings) r.warnings.push_back(fmt::format("M{}: {}", id, w));
    models.emplace_back(fmt::format("M{}", id), estimate_var(s.y, c.p, exog.values, s.names, exog.names, s.dates));
  }
  Eigen::MatrixXd y3(s.y.rows(), s.y.cols() + 1);
  for (Eigen::Index t = 0; t < s.y.rows(); ++t) y3(t, 0) = s.v[static_cast<std::size_t>(t)];
  y3.rightCols(s.y.cols()) = s.y;
  std::vector<std::string> names3{"v"};
  names3.insert(names3.end(), s.names.begin(), s.names.end());
  models.emplace_back("VAR3", estimate_var(y3, c.p, {}, names3, {}, s.dates));

  std::vector<std::vector<std::string>> irf_table;
  irf_rows("pre", pre, irf(pre, c.horizon), irf_table);
  for (const auto& [name, m] : models) irf_rows(name, m, irf(m, c.horizon), irf_table);
  r.files.push_back(out_path(c, "irf.csv"));
  write_table_csv(r.files.back(), {"horizon", "model", "shock", "response", "value"}, irf_table);

  std::vector<std::vector<std::string>> bands_table;
  const std::string chosen = fmt::format("M{}", c.model_id);
  std::vector<std::pair<std::string, const VarModel*>> banded{{"pre", &pre}};
  for (const auto& [name, m] : models)
    if (name == chosen) banded.emplace_back(name, &m);
  for (std::size_t k = 0; k < banded.size(); ++k) {
    BootstrapOptions opt;
    opt.reps = c.reps;
    opt.level = c.level;
    opt.seed = derive_seed(c.seed, k);
    opt.threads = c.threads;
    const auto& m = *banded[k].second;
    const auto b = bootstrap_irf(m, c.horizon, opt);
    if (b.failures > 0) r.warnings.push_back(fmt::format("{}: {} bootstrap replications failed", banded[k].first, b.failures));
    for (std::size_t h = 0; h < b.point.size(); ++h)
      for (Eigen::Index sh = 0; sh < m.n(); ++sh)
        for (Eigen::Index v = 0; v < m.n(); ++v)
          bands_table.push_back({std::to_string(h), banded[k].first, m.variables[static_cast<std::size_t>(sh)],
                                 m.variables[static_cast<std::size_t>(v)], format_double(b.point[h](v, sh)),
                                 format_double(b.lower[h](v, sh)), format_double(b.upper[h](v, sh))});
  }
  r.files.push_back(out_path(c, "irf_bands.csv"));
  write_table_csv(r.files.back(), {"horizon", "model", "shock", "response", "point", "lower", "upper"}, bands_table);

  // shocks in the first four covid months, then the correlation with the pre-covid shocks
  const Eigen::MatrixXd pre_shocks = orthogonalized_shocks(pre);
  const auto pre_shock_dates = residual_dates(pre);
  std::vector<std::string> header{"date"};
  std::vector<std::vector<std::string>> rows(5);
  for (int k = 0; k < 4; ++k) rows[static_cast<std::size_t>(k)].push_back(c.t0.plus(k + 1).iso());
  rows[4].push_back("cor");
  for (const auto& [name, m] : models) {
    const Eigen::MatrixXd e = orthogonalized_shocks(m);
    const auto dates = residual_dates(m);
    const Eigen::Index offset = m.n() - static_cast<Eigen::Index>(s.names.size());
    for (std::size_t j = 0; j < s.names.size(); ++j) {
      const Eigen::Index col = offset + static_cast<Eigen::Index>(j);
      header.push_back(fmt::format("{}_{}", s.names[j], name));
      for (int k = 0; k < 4; ++k) {
        const long t = index_of(dates, c.t0.plus(k + 1));
        rows[static_cast<std::size_t>(k)].push_back(t >= 0 ? format_double(e(t, col)) : "");
      }
      std::vector<double> a, b;
      for (std::size_t t = 0; t < pre_shock_dates.size(); ++t) {
        const long u = index_of(dates, pre_shock_dates[t]);
        if (u < 0) continue;
        a.push_back(e(u, col));
        b.push_back(pre_shocks(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
      }
      rows[4].push_back(a.size() >= 2 ? format_double(correlation(a, b)) : "");
    }
  }
  r.files.push_back(out_path(c, "shocks_table.csv"));
  write_table_csv(r.files.back(), header, rows);
  finish(c, "var", r);
  return r;
}

namespace {

int days_in_month(YearMonth m) {
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (m.year % 4 == 0 && m.year % 100 != 0) || m.year % 400 == 0;
  return m.month == 2 && leap ? 29 : days[m.month - 1];
}

}  // namespace

RunResult run_simulate(const PipelineConfig& c) {
  validate_config(c, "simulate");
  RunResult r;
  const auto dates = month_range(c.sim_start, static_cast<std::size_t>(c.sim_t));
  const long t0 = index_of(dates, c.t0);
  if (t0 < 0 || t0 + 1 >= c.sim_t)
    fail(ErrorCode::config, fmt::format("T0 {} must fall inside the simulated sample with at least one later month", c.t0.iso()));

  DgpConfig dc;
  dc.n = c.sim_n;
  dc.t_n = c.sim_t;
  dc.t0 = t0;
  dc.r = c.sim_r;
  dc.seed = c.seed;
  const auto sim = simulate_dgp(dc);

  RawPanel panel;
  panel.dates = dates;
  panel.names = numbered("S", c.sim_n);
  for (auto& n : panel.names) n = fmt::format("S{:03d}", std::stoi(n.substr(1)));
  panel.tcodes.assign(static_cast<std::size_t>(c.sim_n), 1);
  panel.values = sim.x;
  r.files.push_back(out_path(c, "simulated_fredmd.csv"));
  write_text_file(r.files.back(), to_fredmd_csv(panel));

  // daily counts whose monthly totals grow at the simulated rate
  DailyCovidSeries daily;
  double lp = 16.0, lh = 8.0, ld = 1.0;
  for (Eigen::Index t = t0; t < c.sim_t; ++t) {
    if (t > t0) {
      const double g = sim.virus.growth(t);
      const double g_prev = t - 1 > t0 ? sim.virus.growth(t - 1) : 0.0;
      lp *= std::exp(g);
      lh *= std::exp(g);
      ld *= std::exp(0.7 * g + 0.3 * g_prev);
    }
    const auto month = dates[static_cast<std::size_t>(t)];
    const int nd = days_in_month(month);
    const double totals[3] = {std::max(1.0, std::round(lh)), std::max(1.0, std::round(lp)), std::max(1.0, std::round(ld))};
    for (int day = 1; day <= nd; ++day) {
      daily.dates.push_back({month.year, month.month, day});
      double cell[3];
      for (int k = 0; k < 3; ++k) {
        const double base = std::floor(totals[k] / nd);
        cell[k] = day < nd ? base : totals[k] - base * (nd - 1);
      }
      daily.hospitalized.push_back(cell[0]);
      daily.positive.push_back(cell[1]);
      daily.death.push_back(cell[2]);
    }
  }
  r.files.push_back(out_path(c, "simulated_covid.csv"));
  write_text_file(r.files.back(), to_covid_csv(daily));

  Eigen::MatrixXd truth(c.sim_t, 2 + c.sim_r);
  truth.col(0) = sim.virus.level;
  truth.col(1) = sim.virus.growth;
  truth.rightCols(c.sim_r) = sim.f;
  std::vector<std::string> names{"V", "v"};
  for (const auto& n : numbered("F", c.sim_r)) names.push_back(n);
  r.files.push_back(out_path(c, "simulated_truth.csv"));
  write_dated_csv(r.files.back(), dates, names, truth);
  finish(c, "simulate", r);
  return r;
}

RunResult run_command(const PipelineConfig& c, const std::string& command) {
  if (command == "decovid") return run_decovid(c);
  if (command == "factors") return run_factors(c);
  if (command == "forecast") return run_forecast(c);
  if (command == "uncertainty") return run_uncertainty(c);
  if (command == "var") return run_var(c);
  if (command == "simulate") return run_simulate(c);
  fail(ErrorCode::config, fmt::format("unknown command '{}'", command));
}

}  // namespace decovid
