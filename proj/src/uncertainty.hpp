#pragma once

#include "common.hpp"
#include "forecast.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace decovid {

struct SvOptions {
  double offset = 1e-8;       // added to e^2 before the log
  int min_observations = 100;
  int max_iter = 2000;
  double simplex_tol = 1e-7;
};

/// Log-variance model h_t = mu + htilde_t, htilde_t = rho htilde_{t-1} + eta_t,
/// fitted by Gaussian quasi-likelihood on log(e_t^2).
struct SvFit {
  Eigen::VectorXd h;  // smoothed log variance, one entry per input element
  double rho = 0.0;
  double mu = 0.0;
  double sigma2_eta = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  Eigen::Index observations = 0;
};

/// Missing errors are skipped by the filter and filled by the smoother.
[[nodiscard]] SvFit fit_sv(std::span<const double> errors, const SvOptions& options = {});

/// Kalman filter log likelihood for given parameters; exposed for testing.
[[nodiscard]] double sv_loglik(std::span<const double> errors, double mu, double rho, double sigma2_eta,
                               double offset = 1e-8);

/// One-step-ahead conditional volatility sqrt(E_t exp(h_{t+1})).
[[nodiscard]] Eigen::VectorXd individual_uncertainty(const SvFit& fit);

struct UncertaintyIndex {
  std::string label;
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  Eigen::MatrixXd individual;  // T x N
  Eigen::VectorXd aggregate;   // T

  [[nodiscard]] Eigen::VectorXd standardized() const;
};

/// Cross-sectional mean of the individual series, skipping missing cells.
[[nodiscard]] UncertaintyIndex aggregate_uncertainty(std::string label, std::vector<YearMonth> dates,
                                                     std::vector<std::string> names, Eigen::MatrixXd individual);

/// U(X) - U(x) on identical dates.
[[nodiscard]] Eigen::VectorXd covid_uncertainty(const UncertaintyIndex& u_raw, const UncertaintyIndex& u_decovid);

struct UncertaintyRun {
  UncertaintyIndex index;
  std::vector<SvFit> fits;
  std::vector<ForecastResult> forecasts;
};

/// Forecast every target column on the predictors, fit SV to the errors and
/// average the implied uncertainty.
[[nodiscard]] UncertaintyRun compute_uncertainty(std::string label, const Eigen::MatrixXd& targets,
                                                 const std::vector<std::string>& names, const PredictorSet& predictors,
                                                 const ForecastOptions& forecast = {}, const SvOptions& sv = {});

}  // namespace decovid
