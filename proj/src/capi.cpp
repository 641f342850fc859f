#include "decovid/decovid.h"

#include "covid.hpp"
#include "decovid.hpp"
#include "factors.hpp"
#include "ingest.hpp"
#include "pipeline.hpp"
#include "uncertainty.hpp"
#include "var.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

using namespace decovid;

struct dcv_panel {
  RawPanel panel;
  std::size_t row_errors = 0;
};

struct dcv_indicator {
  CovidIndicator indicator;
};

struct dcv_decovid {
  DecovidResult result;
};

struct dcv_factors {
  FactorSet set;
};

struct dcv_var {
  VarModel model;
};

struct dcv_config {
  PipelineConfig config;
  mutable std::string scratch;
};

struct dcv_run_result {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

dcv_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return DCV_ERR_INVALID_ARGUMENT;
    case ErrorCode::format:
      return DCV_ERR_FORMAT;
    case ErrorCode::domain:
      return DCV_ERR_DOMAIN;
    case ErrorCode::rank_deficient:
      return DCV_ERR_RANK_DEFICIENT;
    case ErrorCode::not_found:
      return DCV_ERR_NOT_FOUND;
    case ErrorCode::convergence:
      return DCV_ERR_CONVERGENCE;
    case ErrorCode::config:
      return DCV_ERR_CONFIG;
    case ErrorCode::internal:
      return DCV_ERR_INTERNAL;
  }
  return DCV_ERR_INTERNAL;
}

template <typename F>
dcv_status guarded(F&& f) {
  try {
    f();
    return DCV_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DCV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DCV_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DCV_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::invalid_argument, what);
}

Eigen::MatrixXd from_row_major(const double* data, std::size_t rows, std::size_t cols) {
  require(data != nullptr || rows * cols == 0, "null matrix pointer");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * cols + j];
  return m;
}

void to_row_major(const Eigen::MatrixXd& m, double* out, std::size_t capacity) {
  const auto need = static_cast<std::size_t>(m.size());
  require(out != nullptr || need == 0, "null output buffer");
  if (capacity < need)
    fail(ErrorCode::invalid_argument, fmt::format("output buffer holds {} values, {} required", capacity, need));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
}

CovidKind kind_of(dcv_kind k) {
  switch (k) {
    case DCV_KIND_HOSPITALIZED:
      return CovidKind::hospitalized;
    case DCV_KIND_POSITIVE:
      return CovidKind::positive;
    case DCV_KIND_DEATH:
      return CovidKind::death;
  }
  fail(ErrorCode::invalid_argument, "unknown covid kind");
}

dcv_indicator* make_indicator(const std::string& csv, dcv_kind kind, int year, int month) {
  require(month >= 1 && month <= 12, "outbreak month must be 1..12");
  const auto parsed = parse_covid_tracking(csv);
  return new dcv_indicator{growth_rate(aggregate_monthly(parsed.series, kind_of(kind)), YearMonth{year, month})};
}

dcv_panel* make_panel(const std::string& csv) {
  auto parsed = parse_fredmd(csv);
  return new dcv_panel{std::move(parsed.panel), parsed.report.row_errors.size()};
}

}  // namespace

extern "C" {

const char* dcv_version(void) { return "0.1.0"; }

const char* dcv_last_error(void) { return g_last_error.c_str(); }

const char* dcv_status_string(dcv_status status) {
  switch (status) {
    case DCV_OK:
      return "ok";
    case DCV_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case DCV_ERR_FORMAT:
      return "format error";
    case DCV_ERR_DOMAIN:
      return "domain error";
    case DCV_ERR_RANK_DEFICIENT:
      return "rank deficient";
    case DCV_ERR_NOT_FOUND:
      return "not found";
    case DCV_ERR_CONVERGENCE:
      return "convergence failure";
    case DCV_ERR_CONFIG:
      return "configuration error";
    case DCV_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

// ---- panels

dcv_status dcv_panel_parse(const char* csv, size_t length, dcv_panel** out) {
  return guarded([&] {
    require(csv != nullptr && out != nullptr, "null argument");
    *out = make_panel(std::string(csv, length));
  });
}

dcv_status dcv_panel_load(const char* path, dcv_panel** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = make_panel(read_text_file(path));
  });
}

void dcv_panel_free(dcv_panel* panel) { delete panel; }

size_t dcv_panel_rows(const dcv_panel* p) { return p ? static_cast<size_t>(p->panel.rows()) : 0; }

size_t dcv_panel_cols(const dcv_panel* p) { return p ? static_cast<size_t>(p->panel.cols()) : 0; }

const char* dcv_panel_name(const dcv_panel* p, size_t col) {
  return p && col < p->panel.names.size() ? p->panel.names[col].c_str() : nullptr;
}

int dcv_panel_tcode(const dcv_panel* p, size_t col) {
  return p && col < p->panel.tcodes.size() ? p->panel.tcodes[col] : 0;
}

dcv_status dcv_panel_date(const dcv_panel* p, size_t row, int* year, int* month) {
  return guarded([&] {
    require(p != nullptr && year != nullptr && month != nullptr, "null argument");
    require(row < p->panel.dates.size(), "row out of range");
    *year = p->panel.dates[row].year;
    *month = p->panel.dates[row].month;
  });
}

double dcv_panel_value(const dcv_panel* p, size_t row, size_t col) {
  if (!p || row >= static_cast<size_t>(p->panel.rows()) || col >= static_cast<size_t>(p->panel.cols())) return kMissing;
  return p->panel.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

size_t dcv_panel_row_errors(const dcv_panel* p) { return p ? p->row_errors : 0; }

// ---- indicators

dcv_status dcv_indicator_parse(const char* csv, size_t length, dcv_kind kind, int year, int month, dcv_indicator** out) {
  return guarded([&] {
    require(csv != nullptr && out != nullptr, "null argument");
    *out = make_indicator(std::string(csv, length), kind, year, month);
  });
}

dcv_status dcv_indicator_load(const char* path, dcv_kind kind, int year, int month, dcv_indicator** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = make_indicator(read_text_file(path), kind, year, month);
  });
}

void dcv_indicator_free(dcv_indicator* indicator) { delete indicator; }

size_t dcv_indicator_months(const dcv_indicator* ind) { return ind ? ind->indicator.months.size() : 0; }

dcv_status dcv_indicator_month(const dcv_indicator* ind, size_t index, int* year, int* month, double* level,
                               double* growth) {
  return guarded([&] {
    require(ind != nullptr, "null indicator");
    require(index < ind->indicator.months.size(), "month index out of range");
    if (year) *year = ind->indicator.months[index].year;
    if (month) *month = ind->indicator.months[index].month;
    if (level) *level = ind->indicator.levels[index];
    if (growth) *growth = ind->indicator.growth[index];
  });
}

// ---- de-covid

dcv_status dcv_decovid_design(int model_id, int q, size_t t0, const double* v, size_t rows, double* out, size_t capacity,
                              size_t* out_rows, size_t* out_cols) {
  return guarded([&] {
    require(v != nullptr || rows == 0, "null covid series");
    DecovidSpec spec;
    spec.model_id = model_id;
    spec.q = q;
    spec.t0 = static_cast<Eigen::Index>(t0);
    const auto d = build_design(spec, std::span<const double>(v, rows));
    to_row_major(d.matrix, out, capacity);
    if (out_rows) *out_rows = static_cast<size_t>(d.matrix.rows());
    if (out_cols) *out_cols = static_cast<size_t>(d.matrix.cols());
  });
}

dcv_status dcv_decovid_run(const double* panel, size_t rows, size_t cols, const double* v, int model_id, int q,
                           size_t t0, dcv_decovid** out) {
  return guarded([&] {
    require(out != nullptr && v != nullptr, "null argument");
    DecovidSpec spec;
    spec.model_id = model_id;
    spec.q = q;
    spec.t0 = static_cast<Eigen::Index>(t0);
    *out = new dcv_decovid{decovid_panel(from_row_major(panel, rows, cols), {}, spec, std::span<const double>(v, rows))};
  });
}

void dcv_decovid_free(dcv_decovid* result) { delete result; }

dcv_status dcv_decovid_x(const dcv_decovid* r, double* out, size_t capacity) {
  return guarded([&] {
    require(r != nullptr, "null result");
    to_row_major(r->result.x, out, capacity);
  });
}

dcv_status dcv_decovid_mu1(const dcv_decovid* r, double* out, size_t capacity) {
  return guarded([&] {
    require(r != nullptr, "null result");
    to_row_major(r->result.mu1, out, capacity);
  });
}

dcv_status dcv_decovid_mu0(const dcv_decovid* r, double* out, size_t capacity) {
  return guarded([&] {
    require(r != nullptr, "null result");
    to_row_major(r->result.mu0.transpose(), out, capacity);
  });
}

size_t dcv_decovid_warnings(const dcv_decovid* r) { return r ? r->result.warnings.size() : 0; }

const char* dcv_decovid_warning(const dcv_decovid* r, size_t index) {
  return r && index < r->result.warnings.size() ? r->result.warnings[index].c_str() : nullptr;
}

// ---- factors

dcv_status dcv_factors_estimate(const double* panel, size_t rows, size_t cols, int r, dcv_factors** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new dcv_factors{estimate_factors(from_row_major(panel, rows, cols), r)};
  });
}

void dcv_factors_free(dcv_factors* f) { delete f; }

size_t dcv_factors_rank(const dcv_factors* f) { return f ? static_cast<size_t>(f->set.rank()) : 0; }

dcv_status dcv_factors_scores(const dcv_factors* f, double* out, size_t capacity) {
  return guarded([&] {
    require(f != nullptr, "null factors");
    to_row_major(f->set.scores, out, capacity);
  });
}

dcv_status dcv_factors_loadings(const dcv_factors* f, double* out, size_t capacity) {
  return guarded([&] {
    require(f != nullptr, "null factors");
    to_row_major(f->set.loadings, out, capacity);
  });
}

dcv_status dcv_factors_shares(const dcv_factors* f, double* out, size_t capacity) {
  return guarded([&] {
    require(f != nullptr, "null factors");
    to_row_major(f->set.variance_shares.transpose(), out, capacity);
  });
}

// ---- SV

dcv_status dcv_sv_fit(const double* errors, size_t n, double* rho, double* mu, double* sigma2_eta, double* uncertainty) {
  return guarded([&] {
    require(errors != nullptr, "null errors");
    const auto fit = fit_sv(std::span<const double>(errors, n));
    if (rho) *rho = fit.rho;
    if (mu) *mu = fit.mu;
    if (sigma2_eta) *sigma2_eta = fit.sigma2_eta;
    if (uncertainty) {
      const Eigen::VectorXd u = individual_uncertainty(fit);
      std::memcpy(uncertainty, u.data(), n * sizeof(double));
    }
  });
}

// ---- VAR

dcv_status dcv_var_estimate(const double* y, size_t rows, size_t n, int p, const double* exog, size_t m, dcv_var** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const Eigen::MatrixXd z = m > 0 ? from_row_major(exog, rows, m) : Eigen::MatrixXd();
    *out = new dcv_var{estimate_var(from_row_major(y, rows, n), p, z)};
  });
}

void dcv_var_free(dcv_var* model) { delete model; }

size_t dcv_var_dim(const dcv_var* model) { return model ? static_cast<size_t>(model->model.n()) : 0; }

dcv_status dcv_var_sigma(const dcv_var* v, double* out, size_t capacity) {
  return guarded([&] {
    require(v != nullptr, "null model");
    to_row_major(v->model.sigma, out, capacity);
  });
}

dcv_status dcv_var_impact(const dcv_var* v, double* out, size_t capacity) {
  return guarded([&] {
    require(v != nullptr, "null model");
    to_row_major(v->model.chol, out, capacity);
  });
}

dcv_status dcv_var_lag(const dcv_var* v, int lag, double* out, size_t capacity) {
  return guarded([&] {
    require(v != nullptr, "null model");
    require(lag >= 1 && lag <= v->model.p, "lag out of range");
    to_row_major(v->model.lags[static_cast<std::size_t>(lag - 1)], out, capacity);
  });
}

namespace {

void write_blocks(const std::vector<Eigen::MatrixXd>& blocks, double* out, size_t capacity) {
  const std::size_t per = blocks.empty() ? 0 : static_cast<std::size_t>(blocks.front().size());
  if (capacity < per * blocks.size())
    fail(ErrorCode::invalid_argument, fmt::format("output buffer holds {} values, {} required", capacity, per * blocks.size()));
  for (std::size_t h = 0; h < blocks.size(); ++h) to_row_major(blocks[h], out + h * per, per);
}

}  // namespace

dcv_status dcv_var_irf(const dcv_var* v, int horizon, double* out, size_t capacity) {
  return guarded([&] {
    require(v != nullptr && out != nullptr, "null argument");
    write_blocks(irf(v->model, horizon), out, capacity);
  });
}

dcv_status dcv_var_bootstrap(const dcv_var* v, int horizon, int reps, double level, uint64_t seed, double* lower,
                             double* upper, size_t capacity) {
  return guarded([&] {
    require(v != nullptr && lower != nullptr && upper != nullptr, "null argument");
    BootstrapOptions opt;
    opt.reps = reps;
    opt.level = level;
    opt.seed = seed;
    const auto b = bootstrap_irf(v->model, horizon, opt);
    write_blocks(b.lower, lower, capacity);
    write_blocks(b.upper, upper, capacity);
  });
}

dcv_status dcv_var_shocks(const dcv_var* v, double* out, size_t capacity) {
  return guarded([&] {
    require(v != nullptr, "null model");
    to_row_major(orthogonalized_shocks(v->model), out, capacity);
  });
}

// ---- pipeline

dcv_config* dcv_config_create(void) {
  try {
    return new dcv_config{};
  } catch (...) {
    g_last_error = "out of memory";
    return nullptr;
  }
}

void dcv_config_free(dcv_config* config) { delete config; }

dcv_status dcv_config_set(dcv_config* c, const char* key, const char* value) {
  return guarded([&] {
    require(c != nullptr && key != nullptr && value != nullptr, "null argument");
    set_config_value(c->config, key, value);
  });
}

dcv_status dcv_config_load(dcv_config* c, const char* path) {
  return guarded([&] {
    require(c != nullptr && path != nullptr, "null argument");
    load_config_file(c->config, path);
  });
}

dcv_status dcv_config_apply_env(dcv_config* c) {
  return guarded([&] {
    require(c != nullptr, "null config");
    apply_environment(c->config);
  });
}

const char* dcv_config_get(const dcv_config* c, const char* key) {
  if (!c || !key) return nullptr;
  const auto echo = config_echo(c->config);
  const auto it = echo.find(key);
  if (it == echo.end()) return nullptr;
  c->scratch = it->second;
  return c->scratch.c_str();
}

dcv_status dcv_run(const dcv_config* c, const char* command, dcv_run_result** out) {
  return guarded([&] {
    require(c != nullptr && command != nullptr, "null argument");
    auto r = run_command(c->config, command);
    if (out) {
      auto* res = new dcv_run_result;
      for (const auto& f : r.files) res->files.push_back(f.string());
      res->warnings = std::move(r.warnings);
      *out = res;
    }
  });
}

void dcv_run_result_free(dcv_run_result* result) { delete result; }

size_t dcv_run_result_files(const dcv_run_result* r) { return r ? r->files.size() : 0; }

const char* dcv_run_result_file(const dcv_run_result* r, size_t index) {
  return r && index < r->files.size() ? r->files[index].c_str() : nullptr;
}

size_t dcv_run_result_warnings(const dcv_run_result* r) { return r ? r->warnings.size() : 0; }

const char* dcv_run_result_warning(const dcv_run_result* r, size_t index) {
  return r && index < r->warnings.size() ? r->warnings[index].c_str() : nullptr;
}

}  // extern "C"
