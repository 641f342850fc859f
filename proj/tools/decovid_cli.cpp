#include "decovid/decovid.h"

#include <CLI11.hpp>

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

// Flags mirror the configuration keys one to one.
const std::vector<std::pair<std::string, std::string>> kOptions = {
    {"macro_csv", "FRED-MD style macro panel"},
    {"financial_csv", "optional financial panel in the same layout"},
    {"covid_csv", "daily covidtracking national history"},
    {"output_dir", "directory for CSV outputs and the manifest"},
    {"model_id", "de-covid model 1..4"},
    {"kind", "covid indicator H, P or D"},
    {"q", "number of lags of v"},
    {"estimation", "post or full"},
    {"t0", "last pre-covid month, yyyy-mm"},
    {"r_m", "macro factors"},
    {"r_f", "financial factors"},
    {"em_rank", "EM imputation rank (0: r_m)"},
    {"em_tol", "EM tolerance"},
    {"em_max_iter", "EM iteration cap"},
    {"predictor_mode", "post or pre"},
    {"forecast_horizon", "forecast horizon h"},
    {"p_y", "own lags in forecasting equations"},
    {"p_w", "predictor lags in forecasting equations"},
    {"screen_threshold", "|t| threshold for predictor screening"},
    {"p", "VAR lag order"},
    {"horizon", "impulse response horizon"},
    {"reps", "bootstrap replications"},
    {"level", "bootstrap band level"},
    {"threads", "bootstrap worker threads (0: all cores)"},
    {"var_series", "comma-separated VAR variables"},
    {"var_log", "VAR variables entered in logs"},
    {"var_start", "first VAR month"},
    {"var_pre_end", "last month of the pre-covid VAR"},
    {"seed", "master seed"},
    {"sim_n", "simulated series"},
    {"sim_t", "simulated months"},
    {"sim_r", "simulated factors"},
    {"sim_start", "first simulated month"},
};

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"decovid", "purge covid variation: mu1.csv, x_panel.csv"},
    {"factors", "factors of the de-covid panel: factors.csv, variance_shares.csv, correlations.csv"},
    {"forecast", "diffusion-index forecast errors and screened predictors"},
    {"uncertainty", "uncertainty of raw and de-covid panels: U_X.csv, U_x.csv, covid_U.csv"},
    {"var", "VARs with covid controls: irf.csv, irf_bands.csv, shocks_table.csv"},
    {"simulate", "synthetic macro panel and covid counts"},
};

struct ConfigDeleter {
  void operator()(dcv_config* c) const { dcv_config_free(c); }
};

int report(dcv_status status) {
  std::fprintf(stderr, "error (%s): %s\n", dcv_status_string(status), dcv_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"De-covid macro panels, factors, uncertainty and VARs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dcv_version());

  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> given;
  std::string chosen;
  for (const auto& [name, help] : kCommands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file");
    for (const auto& [key, opt_help] : kOptions) given.emplace_back(key, sub->add_option("--" + key, values[key], opt_help));
    sub->callback([&chosen, name = name] { chosen = name; });
  }
  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<dcv_config, ConfigDeleter> config(dcv_config_create());
  if (!config) return report(DCV_ERR_INTERNAL);
  dcv_status st = DCV_OK;
  if (!config_path.empty() && (st = dcv_config_load(config.get(), config_path.c_str())) != DCV_OK) return report(st);
  if ((st = dcv_config_apply_env(config.get())) != DCV_OK) return report(st);
  // explicit flags win over the file and the environment
  for (const auto& [key, opt] : given) {
    if (opt->count() == 0) continue;
    if ((st = dcv_config_set(config.get(), key.c_str(), values[key].c_str())) != DCV_OK) return report(st);
  }

  dcv_run_result* result = nullptr;
  if ((st = dcv_run(config.get(), chosen.c_str(), &result)) != DCV_OK) return report(st);
  for (size_t i = 0; i < dcv_run_result_warnings(result); ++i)
    std::fprintf(stderr, "warning: %s\n", dcv_run_result_warning(result, i));
  for (size_t i = 0; i < dcv_run_result_files(result); ++i) std::printf("%s\n", dcv_run_result_file(result, i));
  dcv_run_result_free(result);
  return 0;
}
