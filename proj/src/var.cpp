#include "var.hpp"

#include "linalg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace decovid {

ExogBlock build_exog(const DecovidSpec& spec, std::span<const double> v) {
  const auto rows = static_cast<Eigen::Index>(v.size());
  validate_spec(spec, rows);
  if (spec.q > spec.t0 + 1)
    fail(ErrorCode::invalid_argument,
         fmt::format("q={} lags exceed the {} rows of history before the outbreak", spec.q, spec.t0 + 1));

  const Eigen::Index outbreak = spec.t0 + 1;
  const bool dummy = spec.model_id != 4;
  const bool contemporaneous = spec.model_id >= 3;
  auto value = [&](Eigen::Index s) {
    if (s <= spec.t0 || s >= rows) return 0.0;
    if (spec.model_id == 1 && s == outbreak) return 0.0;
    const double x = v[static_cast<std::size_t>(s)];
    if (is_missing(x)) fail(ErrorCode::invalid_argument, fmt::format("covid growth undefined at row {}", s));
    return x;
  };

  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  auto add = [&](std::string name, auto&& fn) {
    Eigen::VectorXd c(rows);
    for (Eigen::Index t = 0; t < rows; ++t) c(t) = fn(t);
    names.push_back(std::move(name));
    cols.push_back(std::move(c));
  };
  if (dummy) add("D", [&](Eigen::Index t) { return t == outbreak ? 1.0 : 0.0; });
  add("post", [&](Eigen::Index t) { return t > spec.t0 ? 1.0 : 0.0; });
  if (contemporaneous) add("v_t", [&](Eigen::Index t) { return value(t); });
  for (int j = 1; j <= spec.q; ++j) add(fmt::format("v_t-{}", j), [&, j](Eigen::Index t) { return value(t - j); });

  ExogBlock out;
  std::vector<Eigen::Index> keep;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].isZero(0.0))
      out.warnings.push_back(fmt::format("exogenous regressor {} is zero on the sample; dropped", names[c]));
    else
      keep.push_back(static_cast<Eigen::Index>(c));
  }
  out.values.resize(rows, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = cols[static_cast<std::size_t>(keep[j])];
    out.names.push_back(names[static_cast<std::size_t>(keep[j])]);
  }
  return out;
}

Eigen::MatrixXd cholesky_identify(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    fail(ErrorCode::invalid_argument, "cholesky_identify: covariance must be square and non-empty");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) fail(ErrorCode::domain, "cholesky_identify: covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  if (!(l.diagonal().array() > 0.0).all())
    fail(ErrorCode::domain, "cholesky_identify: covariance is not positive definite");
  return l;
}

namespace {

// Cholesky that tolerates a positive semidefinite input: a zero pivot leaves its column at zero.
Eigen::MatrixXd semidefinite_cholesky(const Eigen::MatrixXd& s) {
  const Eigen::Index n = s.rows();
  const double scale = std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = s(j, j) - l.row(j).head(j).squaredNorm();
    if (d < -1e-10 * scale) fail(ErrorCode::domain, "residual covariance is not positive semidefinite");
    if (d <= 1e-14 * scale) continue;
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) l(i, j) = (s(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return l;
}

Eigen::MatrixXd regressors(const Eigen::MatrixXd& y, int p, const Eigen::MatrixXd& exog) {
  const Eigen::Index t_n = y.rows(), n = y.cols(), m = exog.cols();
  Eigen::MatrixXd x(t_n - p, 1 + n * p + m);
  for (Eigen::Index t = p; t < t_n; ++t) {
    const Eigen::Index r = t - p;
    x(r, 0) = 1.0;
    for (int i = 1; i <= p; ++i) x.block(r, 1 + (i - 1) * n, 1, n) = y.row(t - i);
    if (m > 0) x.block(r, 1 + n * p, 1, m) = exog.row(t);
  }
  return x;
}

}  // namespace

VarModel estimate_var(const Eigen::MatrixXd& y, int p, const Eigen::MatrixXd& exog, std::vector<std::string> variables,
                      std::vector<std::string> exog_names, std::vector<YearMonth> dates) {
  const Eigen::Index t_n = y.rows(), n = y.cols();
  if (p < 1) fail(ErrorCode::invalid_argument, fmt::format("VAR lag order must be >= 1, got {}", p));
  if (n == 0) fail(ErrorCode::invalid_argument, "VAR needs at least one variable");
  if (y.array().isNaN().any()) fail(ErrorCode::invalid_argument, "VAR data contain missing values");
  const Eigen::Index m = exog.size() == 0 ? 0 : exog.cols();
  if (m > 0 && exog.rows() != t_n) fail(ErrorCode::invalid_argument, "VAR exogenous block and data differ in length");
  if (m > 0 && exog.array().isNaN().any()) fail(ErrorCode::invalid_argument, "VAR exogenous block has missing values");
  const Eigen::Index k = 1 + n * p + m;
  if (t_n - p <= k)
    fail(ErrorCode::invalid_argument,
         fmt::format("VAR({}) with {} variables and {} exogenous regressors needs more than {} usable rows, have {}", p,
                     n, m, k, t_n - p));

  VarModel out;
  out.p = p;
  out.y = y;
  out.exog = m > 0 ? exog : Eigen::MatrixXd(t_n, 0);
  out.dates = std::move(dates);
  if (!out.dates.empty() && static_cast<Eigen::Index>(out.dates.size()) != t_n)
    fail(ErrorCode::invalid_argument, "VAR dates and rows disagree");
  out.variables = std::move(variables);
  for (Eigen::Index j = static_cast<Eigen::Index>(out.variables.size()); j < n; ++j)
    out.variables.push_back(fmt::format("y{}", j + 1));
  out.exog_names = std::move(exog_names);
  for (Eigen::Index j = static_cast<Eigen::Index>(out.exog_names.size()); j < m; ++j)
    out.exog_names.push_back(fmt::format("z{}", j + 1));

  std::vector<std::string> names{"const"};
  for (int i = 1; i <= p; ++i)
    for (Eigen::Index j = 0; j < n; ++j) names.push_back(fmt::format("{}(-{})", out.variables[j], i));
  for (Eigen::Index j = 0; j < m; ++j) names.push_back(out.exog_names[j]);

  const Eigen::MatrixXd x = regressors(y, p, out.exog);
  const auto fit = ols(x, y.bottomRows(t_n - p), names);

  out.intercept = fit.coef.row(0).transpose();
  for (int i = 1; i <= p; ++i) out.lags.push_back(fit.coef.middleRows(1 + (i - 1) * n, n).transpose());
  out.exog_coef = m > 0 ? Eigen::MatrixXd(fit.coef.bottomRows(m).transpose()) : Eigen::MatrixXd(n, 0);
  out.residuals = fit.residuals;
  out.dof = fit.dof;
  out.sigma = fit.residuals.transpose() * fit.residuals / static_cast<double>(fit.dof);
  Eigen::LLT<Eigen::MatrixXd> llt(out.sigma);
  out.chol = llt.info() == Eigen::Success ? Eigen::MatrixXd(llt.matrixL()) : semidefinite_cholesky(out.sigma);
  return out;
}

std::vector<Eigen::MatrixXd> irf(const VarModel& model, int horizon) {
  if (horizon < 0) fail(ErrorCode::invalid_argument, "irf: horizon must be >= 0");
  std::vector<Eigen::MatrixXd> psi;
  psi.push_back(model.chol);
  for (int h = 1; h <= horizon; ++h) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(model.chol.rows(), model.chol.cols());
    for (int i = 1; i <= std::min(h, model.p); ++i) acc += model.lags[static_cast<std::size_t>(i - 1)] * psi[h - i];
    psi.push_back(std::move(acc));
  }
  return psi;
}

namespace {

double percentile(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

IrfBands bootstrap_irf(const VarModel& model, int horizon, const BootstrapOptions& options) {
  if (options.reps < options.min_reps)
    fail(ErrorCode::invalid_argument,
         fmt::format("bootstrap needs at least {} replications, got {}", options.min_reps, options.reps));
  if (!(options.level > 0.0 && options.level < 1.0))
    fail(ErrorCode::invalid_argument, "bootstrap level must lie in (0, 1)");
  if (horizon < 0) fail(ErrorCode::invalid_argument, "irf: horizon must be >= 0");

  const Eigen::Index t_n = model.y.rows(), n = model.n();
  const Eigen::Index t_eff = model.residuals.rows();
  const Eigen::RowVectorXd resid_mean = model.residuals.colwise().mean();
  const Eigen::MatrixXd centered = model.residuals.rowwise() - resid_mean;

  const auto reps = static_cast<std::size_t>(options.reps);
  std::vector<std::vector<Eigen::MatrixXd>> draws(reps);
  std::vector<char> ok(reps, 0);

  auto run = [&](std::size_t rep) {
    std::mt19937_64 rng(derive_seed(options.seed, rep));
    std::uniform_int_distribution<Eigen::Index> pick(0, t_eff - 1);
    Eigen::MatrixXd ys(t_n, n);
    ys.topRows(model.p) = model.y.topRows(model.p);
    for (Eigen::Index t = model.p; t < t_n; ++t) {
      Eigen::VectorXd yt = model.intercept;
      for (int i = 1; i <= model.p; ++i) yt += model.lags[static_cast<std::size_t>(i - 1)] * ys.row(t - i).transpose();
      if (model.m() > 0) yt += model.exog_coef * model.exog.row(t).transpose();
      yt += centered.row(pick(rng)).transpose();
      ys.row(t) = yt.transpose();
    }
    try {
      const auto star = estimate_var(ys, model.p, model.exog, model.variables, model.exog_names);
      draws[rep] = irf(star, horizon);
      ok[rep] = 1;
    } catch (const Error&) {
      ok[rep] = 0;
    }
  };

  unsigned workers = options.threads > 0 ? static_cast<unsigned>(options.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(reps)));
  if (workers == 1) {
    for (std::size_t r = 0; r < reps; ++r) run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < reps; r = next++) run(r);
      });
    for (auto& th : pool) th.join();
  }

  IrfBands out;
  out.level = options.level;
  out.reps = options.reps;
  out.point = irf(model, horizon);
  for (char c : ok) out.failures += c ? 0 : 1;
  if (out.failures * 20 > options.reps)
    fail(ErrorCode::convergence,
         fmt::format("bootstrap: {} of {} replications failed to estimate", out.failures, options.reps));

  const double alpha = (1.0 - options.level) / 2.0;
  std::vector<double> cell;
  for (int h = 0; h <= horizon; ++h) {
    Eigen::MatrixXd lo(n, n), hi(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index s = 0; s < n; ++s) {
        cell.clear();
        for (std::size_t b = 0; b < reps; ++b)
          if (ok[b]) cell.push_back(draws[b][static_cast<std::size_t>(h)](r, s));
        lo(r, s) = percentile(cell, alpha);
        hi(r, s) = percentile(cell, 1.0 - alpha);
      }
    out.lower.push_back(std::move(lo));
    out.upper.push_back(std::move(hi));
  }
  return out;
}

Eigen::MatrixXd orthogonalized_shocks(const VarModel& model) {
  const Eigen::MatrixXd& b = model.chol;
  if ((b.diagonal().array().abs() <= 0.0).any())
    fail(ErrorCode::domain, "orthogonalized_shocks: impact matrix is singular");
  // rows e_t' = u_t' B^{-T}
  const Eigen::MatrixXd et = b.triangularView<Eigen::Lower>().solve(model.residuals.transpose());
  return et.transpose();
}

std::vector<YearMonth> residual_dates(const VarModel& model) {
  if (model.dates.empty()) return {};
  return {model.dates.begin() + model.p, model.dates.end()};
}

}  // namespace decovid
