#include "stocycle/moments.hpp"

#include <cmath>
#include <stdexcept>

#include "stocycle/pacf.hpp"

namespace stocycle {

CompanionForm companion(std::span<const double> phi) {
  const auto p = static_cast<Eigen::Index>(phi.size());
  if (p < 1) throw std::invalid_argument("companion: AR order must be at least 1");
  CompanionForm cf{Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p)};
  for (Eigen::Index j = 0; j < p; ++j) cf.F(0, j) = phi[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < p; ++i) cf.F(i, i - 1) = 1.0;
  cf.g(0) = 1.0;
  return cf;
}

double cumulative_impulse(const CompanionForm& cf, int tau) {
  const auto p = cf.F.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd Fpow = I;
  for (int i = 0; i < std::abs(tau); ++i) Fpow = Fpow * cf.F;
  const Eigen::VectorXd x = (I - cf.F).partialPivLu().solve(cf.g);
  return cf.g.dot((I - Fpow) * x);
}

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Q) {
  const auto d = T.rows();
  Eigen::MatrixXd K(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) K.block(i * d, j * d, d, d) = T(i, j) * T;
  }
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d * d, d * d) - K;
  const Eigen::VectorXd vecQ = Eigen::Map<const Eigen::VectorXd>(Q.data(), d * d);
  const Eigen::VectorXd vecS = A.fullPivLu().solve(vecQ);
  Eigen::MatrixXd S = Eigen::Map<const Eigen::MatrixXd>(vecS.data(), d, d);
  return 0.5 * (S + S.transpose());
}

std::vector<double> ar_autocovariance(std::span<const double> phi, double innovation_variance,
                                      int max_lag) {
  if (!is_stationary(phi)) {
    throw std::invalid_argument("ar_autocovariance: AR coefficients are not stationary");
  }
  if (max_lag < 0) throw std::invalid_argument("ar_autocovariance: negative max_lag");
  std::vector<double> gamma(static_cast<std::size_t>(max_lag) + 1, 0.0);
  const std::size_t p = phi.size();
  if (p == 0) {
    gamma[0] = innovation_variance;
    return gamma;
  }
  const auto cf = companion(phi);
  const Eigen::MatrixXd Q = innovation_variance * cf.g * cf.g.transpose();
  const Eigen::MatrixXd S = solve_discrete_lyapunov(cf.F, Q);
  for (std::size_t tau = 0; tau < gamma.size(); ++tau) {
    if (tau < p) {
      gamma[tau] = S(0, static_cast<Eigen::Index>(tau));
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < p; ++i) acc += phi[i] * gamma[tau - 1 - i];
      gamma[tau] = acc;
    }
  }
  return gamma;
}

namespace {

void require_random_walk_phase(const ModelParameters& params, const char* who) {
  if (params.psi_P != 1.0) throw std::invalid_argument(std::string(who) + ": requires psi_P = 1");
  if (!is_stationary(params.phi)) {
    throw std::invalid_argument(std::string(who) + ": AR coefficients are not stationary");
  }
}

}  // namespace

double theoretical_acvf(const ModelParameters& params, int tau, double cross_sign) {
  require_random_walk_phase(params, "theoretical_acvf");
  if (tau == 0) throw std::invalid_argument("theoretical_acvf: lag 0 is the variance");
  const int lag = std::abs(tau);
  const double s2 = params.sigma2();
  const double var_innov = params.alpha_A * params.alpha_A * s2;
  const double gamma_A = ar_autocovariance(params.phi, var_innov, lag)[static_cast<std::size_t>(lag)];
  const double impulse = params.p() > 0 ? cumulative_impulse(companion(params.phi), lag) : 1.0;

  double acc = 0.0;
  for (std::size_t j = 0; j < params.k(); ++j) {
    const double lam = params.lambda[j];
    const double w = params.weight(j);
    const double damp = std::exp(-lag * params.alpha_P * params.alpha_P * lam * lam * s2 / 2.0);
    const double cos_term = std::cos(lam * lag) * (gamma_A + params.a * params.a);
    const double sin_term = std::sin(lam * lag) * params.a * lam * params.alpha_A *
                            params.alpha_P * s2 * impulse;
    acc += w * w * damp * (cos_term + cross_sign * sin_term);
  }
  return 0.5 * acc;
}

double theoretical_variance(const ModelParameters& params) {
  require_random_walk_phase(params, "theoretical_variance");
  const double s2 = params.sigma2();
  const double gamma_A0 = ar_autocovariance(params.phi, params.alpha_A * params.alpha_A * s2, 0)[0];
  double sum_q2 = 0.0;
  for (std::size_t j = 0; j < params.k(); ++j) sum_q2 += params.weight(j) * params.weight(j);
  return 0.5 * sum_q2 * (gamma_A0 + params.a * params.a) + s2;
}

AmplitudePhaseMoments amplitude_phase_moments(const ModelParameters& params) {
  if (!(std::abs(params.psi_P) < 1.0)) {
    throw std::invalid_argument("amplitude_phase_moments: requires |psi_P| < 1");
  }
  if (!is_stationary(params.phi)) {
    throw std::invalid_argument("amplitude_phase_moments: AR coefficients are not stationary");
  }
  // State (A_t, ..., A_{t-p+1}, P_t); both blocks load on the same eps_t.
  const auto p = static_cast<Eigen::Index>(params.p());
  const Eigen::Index d = p + 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < p; ++j) T(0, j) = params.phi[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < p; ++i) T(i, i - 1) = 1.0;
  T(p, p) = params.psi_P;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  if (p > 0) b(0) = params.alpha_A;
  b(p) = params.alpha_P;
  const Eigen::MatrixXd S = solve_discrete_lyapunov(T, params.sigma2() * b * b.transpose());
  if (p == 0) {
    // A_t = alpha_A eps_t has no state slot; its moments follow directly.
    const double s2 = params.sigma2();
    return {params.alpha_A * params.alpha_A * s2, S(0, 0), params.alpha_A * params.alpha_P * s2};
  }
  return {S(0, 0), S(p, p), S(0, p)};
}

double almost_periodic_mean(const ModelParameters& params, double t, std::size_t n) {
  const auto mom = amplitude_phase_moments(params);
  double acc = trend(t, n, params.beta);
  for (std::size_t j = 0; j < params.k(); ++j) {
    const double lam = params.lambda[j];
    const double arg = lam * (t + params.p_shift[j]);
    const double damp = std::exp(-0.5 * lam * lam * mom.var_P);
    acc += params.weight(j) * damp *
           (params.a * std::sin(arg) + lam * mom.cov_AP * std::cos(arg));
  }
  return acc;
}

}  // namespace stocycle
