#ifndef DECOVID_DECOVID_H
#define DECOVID_DECOVID_H

/*
 * C interface to the decovid library.
 *
 * Conventions:
 *   - Functions return dcv_status; on failure dcv_last_error() holds a
 *     message for the calling thread until its next failing call.
 *   - Matrices are passed row-major as double arrays; missing values are NaN.
 *   - Objects are opaque handles released with their *_free function.
 *     Passing NULL to a *_free function is a no-op.
 *   - Output buffers carry an explicit capacity in doubles; a short buffer
 *     yields DCV_ERR_INVALID_ARGUMENT and nothing is written.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(DCV_BUILDING_LIBRARY)
#define DCV_API __attribute__((visibility("default")))
#else
#define DCV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dcv_status {
  DCV_OK = 0,
  DCV_ERR_INVALID_ARGUMENT = 1,
  DCV_ERR_FORMAT = 2,
  DCV_ERR_DOMAIN = 3,
  DCV_ERR_RANK_DEFICIENT = 4,
  DCV_ERR_NOT_FOUND = 5,
  DCV_ERR_CONVERGENCE = 6,
  DCV_ERR_CONFIG = 7,
  DCV_ERR_INTERNAL = 8
} dcv_status;

typedef enum dcv_kind { DCV_KIND_HOSPITALIZED = 0, DCV_KIND_POSITIVE = 1, DCV_KIND_DEATH = 2 } dcv_kind;

DCV_API const char* dcv_version(void);
DCV_API const char* dcv_last_error(void);
DCV_API const char* dcv_status_string(dcv_status status);

/* ---- monthly panels (FRED-MD layout) ---- */

typedef struct dcv_panel dcv_panel;

DCV_API dcv_status dcv_panel_parse(const char* csv, size_t length, dcv_panel** out);
DCV_API dcv_status dcv_panel_load(const char* path, dcv_panel** out);
DCV_API void dcv_panel_free(dcv_panel* panel);
DCV_API size_t dcv_panel_rows(const dcv_panel* panel);
DCV_API size_t dcv_panel_cols(const dcv_panel* panel);
DCV_API const char* dcv_panel_name(const dcv_panel* panel, size_t col);
DCV_API int dcv_panel_tcode(const dcv_panel* panel, size_t col);
DCV_API dcv_status dcv_panel_date(const dcv_panel* panel, size_t row, int* year, int* month);
DCV_API double dcv_panel_value(const dcv_panel* panel, size_t row, size_t col);
/* Rows skipped during parsing. */
DCV_API size_t dcv_panel_row_errors(const dcv_panel* panel);

/* ---- covid indicators ---- */

typedef struct dcv_indicator dcv_indicator;

/* Daily covidtracking CSV to monthly levels V and growth v for one kind.
   `outbreak` is the first month in which v is defined. */
DCV_API dcv_status dcv_indicator_parse(const char* csv, size_t length, dcv_kind kind, int outbreak_year,
                                       int outbreak_month, dcv_indicator** out);
DCV_API dcv_status dcv_indicator_load(const char* path, dcv_kind kind, int outbreak_year, int outbreak_month,
                                      dcv_indicator** out);
DCV_API void dcv_indicator_free(dcv_indicator* indicator);
DCV_API size_t dcv_indicator_months(const dcv_indicator* indicator);
/* level and growth may be NULL; growth is NaN where undefined. */
DCV_API dcv_status dcv_indicator_month(const dcv_indicator* indicator, size_t index, int* year, int* month,
                                       double* level, double* growth);

/* ---- de-covid regressions ---- */

/* Post-sample design for rows t0+1..rows-1. Writes (rows-t0-1) x cols values;
   `cols` receives the column count. */
DCV_API dcv_status dcv_decovid_design(int model_id, int q, size_t t0, const double* v, size_t rows, double* out,
                                      size_t capacity, size_t* out_rows, size_t* out_cols);

typedef struct dcv_decovid dcv_decovid;

/* `panel` is rows x cols; `v` has `rows` entries aligned with it. */
DCV_API dcv_status dcv_decovid_run(const double* panel, size_t rows, size_t cols, const double* v, int model_id, int q,
                                   size_t t0, dcv_decovid** out);
DCV_API void dcv_decovid_free(dcv_decovid* result);
/* rows x cols adjusted panel */
DCV_API dcv_status dcv_decovid_x(const dcv_decovid* result, double* out, size_t capacity);
/* (rows - t0 - 1) x cols fitted covid component */
DCV_API dcv_status dcv_decovid_mu1(const dcv_decovid* result, double* out, size_t capacity);
/* cols pre-covid means */
DCV_API dcv_status dcv_decovid_mu0(const dcv_decovid* result, double* out, size_t capacity);
DCV_API size_t dcv_decovid_warnings(const dcv_decovid* result);
DCV_API const char* dcv_decovid_warning(const dcv_decovid* result, size_t index);

/* ---- principal-component factors ---- */

typedef struct dcv_factors dcv_factors;

/* Standardizes the complete rows x cols panel and extracts r factors. */
DCV_API dcv_status dcv_factors_estimate(const double* panel, size_t rows, size_t cols, int r, dcv_factors** out);
DCV_API void dcv_factors_free(dcv_factors* factors);
DCV_API size_t dcv_factors_rank(const dcv_factors* factors);
DCV_API dcv_status dcv_factors_scores(const dcv_factors* factors, double* out, size_t capacity);   /* rows x r */
DCV_API dcv_status dcv_factors_loadings(const dcv_factors* factors, double* out, size_t capacity); /* cols x r */
DCV_API dcv_status dcv_factors_shares(const dcv_factors* factors, double* out, size_t capacity);   /* r */

/* ---- stochastic volatility ---- */

/* Fits the log-variance model to `errors` (NaN entries skipped). Any output
   pointer may be NULL; `uncertainty` receives n values. */
DCV_API dcv_status dcv_sv_fit(const double* errors, size_t n, double* rho, double* mu, double* sigma2_eta,
                              double* uncertainty);

/* ---- VARs ---- */

typedef struct dcv_var dcv_var;

/* y is rows x n, exog rows x m (NULL when m == 0). */
DCV_API dcv_status dcv_var_estimate(const double* y, size_t rows, size_t n, int p, const double* exog, size_t m,
                                    dcv_var** out);
DCV_API void dcv_var_free(dcv_var* model);
DCV_API size_t dcv_var_dim(const dcv_var* model);
DCV_API dcv_status dcv_var_sigma(const dcv_var* model, double* out, size_t capacity);           /* n x n */
DCV_API dcv_status dcv_var_impact(const dcv_var* model, double* out, size_t capacity);          /* n x n, B */
DCV_API dcv_status dcv_var_lag(const dcv_var* model, int lag, double* out, size_t capacity);    /* n x n, A_lag */
/* (horizon + 1) blocks of n x n: element [h][response][shock]. */
DCV_API dcv_status dcv_var_irf(const dcv_var* model, int horizon, double* out, size_t capacity);
DCV_API dcv_status dcv_var_bootstrap(const dcv_var* model, int horizon, int reps, double level, uint64_t seed,
                                     double* lower, double* upper, size_t capacity);
/* (rows - p) x n structural shocks */
DCV_API dcv_status dcv_var_shocks(const dcv_var* model, double* out, size_t capacity);

/* ---- pipeline ---- */

typedef struct dcv_config dcv_config;
typedef struct dcv_run_result dcv_run_result;

DCV_API dcv_config* dcv_config_create(void);
DCV_API void dcv_config_free(dcv_config* config);
DCV_API dcv_status dcv_config_set(dcv_config* config, const char* key, const char* value);
DCV_API dcv_status dcv_config_load(dcv_config* config, const char* path);
DCV_API dcv_status dcv_config_apply_env(dcv_config* config);
/* Current value of a key as text, or NULL for an unknown key. */
DCV_API const char* dcv_config_get(const dcv_config* config, const char* key);

/* command: decovid | factors | forecast | uncertainty | var | simulate */
DCV_API dcv_status dcv_run(const dcv_config* config, const char* command, dcv_run_result** out);
DCV_API void dcv_run_result_free(dcv_run_result* result);
DCV_API size_t dcv_run_result_files(const dcv_run_result* result);
DCV_API const char* dcv_run_result_file(const dcv_run_result* result, size_t index);
DCV_API size_t dcv_run_result_warnings(const dcv_run_result* result);
DCV_API const char* dcv_run_result_warning(const dcv_run_result* result, size_t index);

#ifdef __cplusplus
}
#endif

#endif /* DECOVID_DECOVID_H */
