#pragma once

// Closed-form moment structure of the stochastic cycle model.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "stocycle/model.hpp"

namespace stocycle {

// First-order (companion) representation of the AR(p) amplitude process:
// F has phi in its first row and ones on the subdiagonal, g = e_1.
struct CompanionForm {
  Eigen::MatrixXd F;
  Eigen::VectorXd g;
};

// Requires p >= 1.
CompanionForm companion(std::span<const double> phi);

// g' (I - F^tau) (I - F)^{-1} g, i.e. the sum of the first tau impulse
// responses of the AR process. Zero at tau = 0.
double cumulative_impulse(const CompanionForm& cf, int tau);

// gamma_A(0..max_lag) of an AR(p) driven by white noise of the given variance.
// Throws std::invalid_argument for non-stationary phi.
std::vector<double> ar_autocovariance(std::span<const double> phi, double innovation_variance,
                                      int max_lag);

// Sign joining the cosine and sine terms of the random-walk-phase
// autocovariance. Settled by simulation (see tests/moments_oracle_test.cpp):
//   gamma_y(tau) = 1/2 sum_j q_j^2 exp(-|tau| alpha_P^2 lambda_j^2 sigma^2 / 2) *
//                  [cos(lambda_j tau)(gamma_A(tau) + a^2)
//                   - sin(lambda_j tau) a lambda_j alpha_A alpha_P sigma^2 G(tau)]
// with G(tau) = cumulative_impulse(companion(phi), tau).
inline constexpr double kAcvfCrossTermSign = -1.0;

// Autocovariance of y_t - mu(t) at lag tau != 0 under psi_P = 1. `cross_sign`
// is exposed only so the oracle can test the competing sign.
// Throws std::invalid_argument if psi_P != 1, tau == 0 or phi is not stationary.
double theoretical_acvf(const ModelParameters& params, int tau,
                        double cross_sign = kAcvfCrossTermSign);

// Var(y_t) = 1/2 (sum_j q_j^2)(gamma_A(0) + a^2) + 1/omega, psi_P = 1.
double theoretical_variance(const ModelParameters& params);

// Stationary second moments of (A_t, P_t) for |psi_P| < 1, from the discrete
// Lyapunov equation of the stacked AR system sharing eps_t.
struct AmplitudePhaseMoments {
  double var_A = 0.0;
  double var_P = 0.0;
  double cov_AP = 0.0;
};
AmplitudePhaseMoments amplitude_phase_moments(const ModelParameters& params);

// E(y_t) under |psi_P| < 1 (trend scaled by n):
//   mu(t) + sum_j q_j e^{-lambda_j^2 var_P / 2}
//                 (a sin(lambda_j (t + p_j)) + lambda_j cov_AP cos(lambda_j (t + p_j)))
// Throws std::invalid_argument if |psi_P| >= 1.
double almost_periodic_mean(const ModelParameters& params, double t, std::size_t n);

// Solves S = T S T' + Q for a stable T.
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Q);

}  // namespace stocycle
