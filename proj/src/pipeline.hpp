#pragma once

#include "common.hpp"
#include "covid.hpp"
#include "decovid.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace decovid {

/// Everything a subcommand needs. Keys accepted by set_config_value are the
/// field names below.
struct PipelineConfig {
  std::string macro_csv;
  std::string financial_csv;  // optional
  std::string covid_csv;
  std::string output_dir = "out";

  int model_id = 4;
  CovidKind kind = CovidKind::positive;
  int q = 2;
  Estimation estimation = Estimation::post_sample;
  YearMonth t0{2020, 2};

  int r_m = 8;
  int r_f = 4;
  int em_rank = 0;  // 0: use r_m
  double em_tol = 1e-6;
  int em_max_iter = 200;

  std::string predictor_mode = "post";  // post | pre
  int forecast_horizon = 1;
  int p_y = 4;
  int p_w = 2;
  double screen_threshold = 2.56;

  int p = 6;
  int horizon = 24;
  int reps = 1000;
  double level = 0.95;
  int threads = 0;
  std::vector<std::string> var_series{"UNRATE", "INDPRO"};
  std::vector<std::string> var_log{"INDPRO"};
  YearMonth var_start{1961, 1};
  YearMonth var_pre_end{2019, 12};

  std::uint64_t seed = 20210221;

  // simulate
  int sim_n = 12;
  int sim_t = 192;
  int sim_r = 2;
  YearMonth sim_start{2005, 1};
};

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

/// key = value lines; blank lines and '#' comments are ignored.
void load_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// DECOVID_OUTPUT_DIR, when set and non-empty, replaces output_dir.
void apply_environment(PipelineConfig& config);

[[nodiscard]] std::map<std::string, std::string> config_echo(const PipelineConfig& config);

/// Checks the parameters a subcommand depends on.
void validate_config(const PipelineConfig& config, const std::string& command);

struct RunResult {
  std::vector<std::filesystem::path> files;  // manifest last
  std::vector<std::string> warnings;
};

[[nodiscard]] RunResult run_decovid(const PipelineConfig& config);
[[nodiscard]] RunResult run_factors(const PipelineConfig& config);
[[nodiscard]] RunResult run_forecast(const PipelineConfig& config);
[[nodiscard]] RunResult run_uncertainty(const PipelineConfig& config);
[[nodiscard]] RunResult run_var(const PipelineConfig& config);
[[nodiscard]] RunResult run_simulate(const PipelineConfig& config);

/// Dispatches on the subcommand name.
[[nodiscard]] RunResult run_command(const PipelineConfig& config, const std::string& command);

}  // namespace decovid
