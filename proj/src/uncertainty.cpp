#include "uncertainty.hpp"

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace decovid {

namespace {

constexpr double kLogChi2Mean = -1.2704;
constexpr double kLogChi2Var = std::numbers::pi * std::numbers::pi / 2.0;

std::vector<double> log_squares(std::span<const double> e, double offset) {
  std::vector<double> y(e.size());
  for (std::size_t t = 0; t < e.size(); ++t)
    y[t] = is_missing(e[t]) ? kMissing : std::log(e[t] * e[t] + offset) - kLogChi2Mean;
  return y;
}

struct FilterPass {
  std::vector<double> a_pred, p_pred, a_filt, p_filt;
  double loglik = 0.0;
};

// State htilde_t; measurement y_t = mu + htilde_t + xi_t.
FilterPass kalman(const std::vector<double>& y, double mu, double rho, double s2) {
  const std::size_t n = y.size();
  FilterPass f;
  f.a_pred.resize(n);
  f.p_pred.resize(n);
  f.a_filt.resize(n);
  f.p_filt.resize(n);
  double a = 0.0;
  double p = s2 / (1.0 - rho * rho);
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      a = rho * a;
      p = rho * rho * p + s2;
    }
    f.a_pred[t] = a;
    f.p_pred[t] = p;
    if (!is_missing(y[t])) {
      const double v = y[t] - mu - a;
      const double fv = p + kLogChi2Var;
      f.loglik += -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(fv) + v * v / fv);
      const double k = p / fv;
      a += k * v;
      p *= 1.0 - k;
    }
    f.a_filt[t] = a;
    f.p_filt[t] = p;
  }
  return f;
}

struct Objective {
  const std::vector<double>* y;
};

void unpack(const gsl_vector* x, double& mu, double& rho, double& s2) {
  mu = gsl_vector_get(x, 0);
  rho = std::tanh(gsl_vector_get(x, 1));
  s2 = std::exp(gsl_vector_get(x, 2));
}

double negative_loglik(const gsl_vector* x, void* params) {
  const auto* obj = static_cast<const Objective*>(params);
  double mu, rho, s2;
  unpack(x, mu, rho, s2);
  if (!(std::abs(rho) < 0.9999) || !(s2 > 1e-12) || !std::isfinite(s2)) return 1e300;
  const double ll = kalman(*obj->y, mu, rho, s2).loglik;
  return std::isfinite(ll) ? -ll : 1e300;
}

struct Optimum {
  double mu, rho, s2, value;
  bool converged;
  int iterations;
};

Optimum minimize(const std::vector<double>& y, double mu0, double rho0, double s20, const SvOptions& opt) {
  Objective obj{&y};
  gsl_multimin_function fn{&negative_loglik, 3, &obj};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  gsl_vector_set(x, 0, mu0);
  gsl_vector_set(x, 1, std::atanh(rho0));
  gsl_vector_set(x, 2, std::log(s20));
  gsl_vector_set_all(step, 0.5);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(s, &fn, x, step);

  int status = GSL_CONTINUE;
  int iter = 0;
  while (status == GSL_CONTINUE && iter < opt.max_iter) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(s) != 0) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opt.simplex_tol);
  }
  Optimum out{};
  unpack(s->x, out.mu, out.rho, out.s2);
  out.value = s->fval;
  out.converged = status == GSL_SUCCESS;
  out.iterations = iter;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return out;
}

}  // namespace

double sv_loglik(std::span<const double> errors, double mu, double rho, double sigma2_eta, double offset) {
  return kalman(log_squares(errors, offset), mu, rho, sigma2_eta).loglik;
}

SvFit fit_sv(std::span<const double> errors, const SvOptions& options) {
  const auto y = log_squares(errors, options.offset);
  const auto n_obs = static_cast<Eigen::Index>(count_observed(y));
  if (n_obs < options.min_observations)
    fail(ErrorCode::invalid_argument,
         fmt::format("fit_sv: {} observed errors, at least {} required", n_obs, options.min_observations));
  const double ybar = nan_mean(y);

  gsl_set_error_handler_off();
  // Coarse grid over (rho, sigma2) at mu = ybar, simplex from the three best
  // points, then restarts from the winner until the simplex settles.
  std::vector<std::pair<double, std::pair<double, double>>> grid;
  for (double rho : {-0.5, 0.0, 0.5, 0.8, 0.9, 0.95, 0.98})
    for (double s2 : {0.002, 0.02, 0.1, 0.5}) {
      const double ll = kalman(y, ybar, rho, s2).loglik;
      grid.push_back({std::isfinite(ll) ? -ll : 1e300, {rho, s2}});
    }
  std::stable_sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Optimum best = minimize(y, ybar, grid[0].second.first, grid[0].second.second, options);
  for (std::size_t i = 1; i < 3; ++i) {
    const auto o = minimize(y, ybar, grid[i].second.first, grid[i].second.second, options);
    if (o.value < best.value - 1e-9) best = o;
  }
  for (int restart = 0; restart < 3; ++restart) {
    const auto again = minimize(y, best.mu, best.rho, best.s2, options);
    if (again.value <= best.value + 1e-9) best = again;
    if (best.converged) break;
  }
  // sigma2 drifting to zero: the constant-volatility boundary has a closed form
  if (!best.converged && best.s2 < 1e-4) {
    const double flat = -kalman(y, ybar, 0.0, 0.0).loglik;
    if (flat <= best.value + 1e-6) best = {ybar, 0.0, 0.0, flat, true, best.iterations};
  }

  SvFit out;
  out.mu = best.mu;
  out.rho = best.rho;
  out.sigma2_eta = best.s2;
  out.loglik = -best.value;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.observations = n_obs;

  // RTS smoother
  const auto f = kalman(y, out.mu, out.rho, out.sigma2_eta);
  const std::size_t n = y.size();
  std::vector<double> smooth(n);
  if (n > 0) smooth[n - 1] = f.a_filt[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    const double j = f.p_pred[t + 1] > 0.0 ? f.p_filt[t] * out.rho / f.p_pred[t + 1] : 0.0;
    smooth[t] = f.a_filt[t] + j * (smooth[t + 1] - f.a_pred[t + 1]);
  }
  out.h.resize(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) out.h(static_cast<Eigen::Index>(t)) = out.mu + smooth[t];
  return out;
}

Eigen::VectorXd individual_uncertainty(const SvFit& fit) {
  const double c = (1.0 - fit.rho) * fit.mu + 0.5 * fit.sigma2_eta;
  return ((fit.rho * fit.h.array() + c).exp()).sqrt();
}

Eigen::VectorXd UncertaintyIndex::standardized() const {
  const double m = nan_mean(as_span(aggregate));
  const double sd = nan_sd(as_span(aggregate));
  if (!(sd > 0.0)) fail(ErrorCode::domain, fmt::format("uncertainty index {} has zero variance", label));
  return (aggregate.array() - m) / sd;
}

UncertaintyIndex aggregate_uncertainty(std::string label, std::vector<YearMonth> dates, std::vector<std::string> names,
                                       Eigen::MatrixXd individual) {
  if (individual.cols() == 0) fail(ErrorCode::invalid_argument, "aggregate_uncertainty: no series");
  if (individual.rows() != static_cast<Eigen::Index>(dates.size()))
    fail(ErrorCode::invalid_argument, "aggregate_uncertainty: rows and dates disagree");
  UncertaintyIndex out;
  out.label = std::move(label);
  out.dates = std::move(dates);
  out.names = std::move(names);
  out.aggregate.resize(individual.rows());
  for (Eigen::Index t = 0; t < individual.rows(); ++t) {
    double s = 0.0;
    int k = 0;
    for (Eigen::Index j = 0; j < individual.cols(); ++j)
      if (!is_missing(individual(t, j))) {
        s += individual(t, j);
        ++k;
      }
    out.aggregate(t) = k > 0 ? s / k : kMissing;
  }
  out.individual = std::move(individual);
  return out;
}

Eigen::VectorXd covid_uncertainty(const UncertaintyIndex& u_raw, const UncertaintyIndex& u_decovid) {
  if (u_raw.dates != u_decovid.dates)
    fail(ErrorCode::invalid_argument, "covid_uncertainty: the two indices cover different months");
  return u_raw.aggregate - u_decovid.aggregate;
}

UncertaintyRun compute_uncertainty(std::string label, const Eigen::MatrixXd& targets, const std::vector<std::string>& names,
                                   const PredictorSet& predictors, const ForecastOptions& forecast, const SvOptions& sv) {
  if (targets.cols() == 0) fail(ErrorCode::invalid_argument, "compute_uncertainty: no target series");
  if (targets.rows() != predictors.values.rows())
    fail(ErrorCode::invalid_argument, "compute_uncertainty: targets and predictors differ in length");
  UncertaintyRun run;
  Eigen::MatrixXd u(targets.rows(), targets.cols());
  for (Eigen::Index j = 0; j < targets.cols(); ++j) {
    const std::string name = j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                         : fmt::format("#{}", j);
    try {
      auto fc = diffusion_forecast(col_span(targets, j), predictors, forecast);
      auto fit = fit_sv(as_span(fc.errors), sv);
      u.col(j) = individual_uncertainty(fit);
      run.fits.push_back(std::move(fit));
      run.forecasts.push_back(std::move(fc));
    } catch (const Error& e) {
      fail(e.code(), fmt::format("{}: series {}: {}", label, name, e.what()));
    }
  }
  run.index = aggregate_uncertainty(std::move(label), predictors.dates, names, std::move(u));
  return run;
}

}  // namespace decovid
