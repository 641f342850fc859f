#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace decovid {

/// Virus growth path: zero through T0, fixed values at T0+1 and T0+2, then
/// an AR(1) with Gaussian innovations.
struct VirusPath {
  double first = 9.4175;
  double second = 1.493;
  double ar = 0.3;
  double sd = 0.5;
  double persistence = 0.5;  // V_t = persistence * V_{t-1} + v_t
};

struct VirusSeries {
  Eigen::VectorXd growth;  // v_t
  Eigen::VectorXd level;   // V_t
};

[[nodiscard]] VirusSeries simulate_virus(Eigen::Index t_n, Eigen::Index t0, const VirusPath& path, std::mt19937_64& rng);

/// Factor panel X_it = Lambda_i' F_t + Gamma_i V_t + e_it.
struct DgpConfig {
  Eigen::Index n = 100;
  Eigen::Index t_n = 200;
  Eigen::Index t0 = 180;  // row index of the last pre-covid month
  int r = 3;
  std::vector<double> factor_ar{0.5};
  double factor_sd = 1.0;
  double idio_ar = 0.3;
  double idio_sd = 1.0;
  double gamma_scale = 1.0;
  double gamma_alignment = 0.9;  // correlation target between Gamma and the first loading column
  double gamma_pervasive = 1.0;  // share of series with a non-zero Gamma
  VirusPath virus;
  std::optional<Eigen::VectorXd> growth_override;  // replaces the simulated v when set
  int burn_in = 200;
  std::uint64_t seed = 1;
};

struct SimulatedPanel {
  Eigen::MatrixXd x;       // T x N
  Eigen::MatrixXd f;       // T x r
  Eigen::MatrixXd lambda;  // N x r
  Eigen::VectorXd gamma;   // N
  Eigen::MatrixXd e;       // T x N
  VirusSeries virus;
};

[[nodiscard]] SimulatedPanel simulate_dgp(const DgpConfig& config);

/// Stable VAR with an additive covid component: Y_t = Y*_t + sum_j C_j v_{t-j}.
struct VarDgp {
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> lags;
  Eigen::MatrixXd impact;  // B
  Eigen::Index t_n = 600;
  int burn_in = 200;
  std::uint64_t seed = 1;
  std::vector<Eigen::VectorXd> injection;  // C_0, C_1, ...
};

/// `growth` may be empty when there is no injection.
[[nodiscard]] Eigen::MatrixXd simulate_var(const VarDgp& dgp, const Eigen::VectorXd& growth = {});

/// Largest modulus of the companion matrix eigenvalues.
[[nodiscard]] double companion_radius(const std::vector<Eigen::MatrixXd>& lags);

}  // namespace decovid
