#pragma once

// Multi-frequency stochastic cycle model in single-source-of-error form:
//
//   y_t   = (a + A_{t-1}) * sum_j q_j sin(lambda_j (t + p_j + P_{t-1})) + mu(t) + eps_t
//   A_t   = phi_1 A_{t-1} + ... + phi_p A_{t-p} + alpha_A eps_t
//   P_t   = psi_P P_{t-1} + alpha_P eps_t
//
// with q_1 = 1, P_0 = 0, mu(t) = sum_i beta_i (t/n)^i and eps_t ~ N(0, 1/omega).
// Time is 1-based throughout, matching the observation index.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stocycle {

struct Dimensions {
  std::size_t k = 1;  // number of frequencies
  std::size_t p = 1;  // AR order of the amplitude deviations
  std::size_t r = 0;  // trend polynomial degree

  bool operator==(const Dimensions&) const = default;
};

struct ModelParameters {
  double a = 0.0;
  std::vector<double> q;        // q_2..q_k; q_1 is fixed at 1 and never stored
  std::vector<double> lambda;   // angular frequencies in (0, pi)
  std::vector<double> p_shift;  // constant phase shifts p_1..p_k
  std::vector<double> beta;     // trend coefficients beta_0..beta_r
  std::vector<double> phi;      // AR coefficients of A_t
  double alpha_A = 0.0;
  double alpha_P = 0.0;
  double psi_P = 1.0;
  double omega = 1.0;           // innovation precision, 1 / sigma^2
  std::vector<double> a_init;   // A_0, A_{-1}, ..., A_{1-p}

  std::size_t k() const { return lambda.size(); }
  std::size_t p() const { return phi.size(); }
  Dimensions dims() const {
    return {lambda.size(), phi.size(), beta.empty() ? 0 : beta.size() - 1};
  }

  // Relative amplitude of frequency j (0-based); weight(0) == 1.
  double weight(std::size_t j) const { return j == 0 ? 1.0 : q[j - 1]; }
  double sigma2() const { return 1.0 / omega; }

  // Zero-valued parameter set of the given shape (psi_P = 1, omega = 1).
  static ModelParameters zeros(const Dimensions& dims);
};

struct TimeSeries {
  std::vector<double> values;
  int periods_per_year = 4;

  std::size_t size() const { return values.size(); }
};

struct LatentPath {
  std::vector<double> A;    // A_t, t = 1..n
  std::vector<double> P;    // P_t, t = 1..n
  std::vector<double> eps;  // eps_t = y_t - m_t
  std::vector<double> m;    // conditional means m_t
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
  std::string message() const;
};

// Checks shapes against dims and the support constraints: lambda in (0, pi)
// and pairwise distinct (strictly descending when `ordered`), phi stationary,
// omega > 0, psi_P in (-1, 1], all values finite. Never throws.
ValidationReport validate(const ModelParameters& params, const Dimensions& dims,
                          bool ordered = false);

// Same, additionally requiring lo_j <= p_j <= hi_j for the given phase bounds.
ValidationReport validate(const ModelParameters& params, const Dimensions& dims,
                          std::span<const std::pair<double, double>> phase_support,
                          bool ordered = false);

// mu(t) = sum_i beta_i (t/n)^i.
double trend(double t, std::size_t n, std::span<const double> beta);

// sin(lambda * x) with x reduced modulo 2*pi/lambda in extended precision.
double cycle_sine(double lambda, double x);

// m_t given A_{t-1} and P_{t-1}; `n` scales the trend.
double conditional_mean(const ModelParameters& params, double t, double A_prev, double P_prev,
                        std::size_t n);

// One-step recursion of the model. Holds (A_{t-1}, ..., A_{t-p}) and P_{t-1}
// and advances them with a given innovation. Used by filtering, simulation,
// decomposition and forecasting so that all share the exact same arithmetic.
class CycleRecursion {
 public:
  CycleRecursion(const ModelParameters& params, std::size_t n_trend);

  // Conditional mean of the next observation (time `t()`).
  double mean() const;
  // Component j of the cyclical part at time t(): (a + A_{t-1}) q_j sin(...).
  double component(std::size_t j) const;
  double amplitude() const { return params_->a + a_hist_.front(); }
  double amplitude_deviation() const { return a_hist_.front(); }
  double phase() const { return phase_; }
  std::size_t t() const { return t_; }
  std::size_t n_trend() const { return n_trend_; }

  // Applies eps_t: updates A and P, moves to t + 1.
  void advance(double eps);

 private:
  const ModelParameters* params_;
  std::size_t n_trend_;
  std::size_t t_ = 1;
  std::vector<double> a_hist_;  // front = A_{t-1}; at least one slot even when p = 0
  double phase_ = 0.0;
};

// Recovers the latent path and residuals from y. Throws std::invalid_argument
// when params fail `validate`.
LatentPath filter(const ModelParameters& params, const TimeSeries& y);

// Sum of squared one-step residuals, without validating params.
double sum_squared_residuals(const ModelParameters& params, const TimeSeries& y);

// Gaussian log-likelihood from the filter residuals. Returns -inf for
// out-of-support parameter points; throws on shape mismatch.
double log_likelihood(const ModelParameters& params, const TimeSeries& y);

struct Simulation {
  TimeSeries series;
  LatentPath path;
};

// Runs the recursion forward with eps_t ~ N(0, 1/omega). The stored path holds
// the realised residuals y_t - m_t, so `filter` on the output reproduces the
// path exactly.
Simulation simulate(const ModelParameters& params, std::size_t n, std::mt19937_64& rng);
Simulation simulate(const ModelParameters& params, std::size_t n, std::uint64_t seed);
Simulation simulate(const ModelParameters& params, std::span<const double> innovations);

// Flat key-value form with canonical names:
// a, q2..qk, lambda1..lambdak, p1..pk, beta0..betar, phi1..phip, alphaA,
// alphaP, omega, A0, A-1, ..., A-(p-1).
std::vector<std::string> parameter_names(const Dimensions& dims);
std::vector<double> to_flat(const ModelParameters& params);
ModelParameters from_flat(std::span<const double> values, const Dimensions& dims,
                          double psi_P = 1.0);
std::map<std::string, double> to_record(const ModelParameters& params);
// Missing keys throw std::invalid_argument naming the key. Key "psiP" is optional.
ModelParameters from_record(const std::map<std::string, double>& record, const Dimensions& dims);

}  // namespace stocycle
