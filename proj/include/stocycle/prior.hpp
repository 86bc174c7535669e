#pragma once

#include <span>
#include <string>
#include <vector>

#include "stocycle/model.hpp"
#include "stocycle/pacf.hpp"

namespace stocycle {

// Beta(b, c) rescaled to the open interval (lo, hi).
struct BetaInterval {
  double b = 1.0;
  double c = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  double logpdf(double x) const;
  bool contains(double x) const { return x > lo && x < hi; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

struct NormalPrior {
  double mean = 0.0;
  double variance = 1.0;

  double logpdf(double x) const;
};

// Gamma with mean shape*scale and variance shape*scale^2.
struct GammaPrior {
  double shape = 2.0;
  double scale = 1.0;

  double logpdf(double x) const;
  double mean() const { return shape * scale; }
};

double beta_on_interval_logpdf(double x, double b, double c, double lo, double hi);
double normal_logpdf(double x, double mean, double variance);
double gamma_logpdf(double x, double shape, double scale);

struct PriorSpec {
  std::vector<BetaInterval> lambda;   // one per frequency, disjoint and descending
  std::vector<BetaInterval> p_shift;  // one per frequency
  NormalPrior a{0.0, 100.0};
  NormalPrior q{0.0, 100.0};
  NormalPrior beta{0.0, 100.0};
  NormalPrior a_init{0.0, 1.0};
  BetaInterval alpha_A{1.0, 1.0, 0.0, 1.0};
  BetaInterval alpha_P{1.0, 1.0, 0.0, 1.0};
  GammaPrior omega{2.0, 1.0};
  BetaInterval rho{1.0, 1.0, -1.0, 1.0};  // each partial autocorrelation of A_t

  std::vector<std::pair<double, double>> phase_bounds() const;
};

// Lists every violated constraint on the hyperparameters (empty when valid).
std::vector<std::string> check(const PriorSpec& spec, const Dimensions& dims);

// Builds the default prior around periodogram peaks. The frequency support of
// each peak is peak*(1 -+ half_width), clipped to (0, pi) and split at the
// midpoint where neighbours would overlap. Peaks are relabelled into
// descending frequency order; the phase support of frequency j is
// [0, pi / lower_j]. All shapes default to uniform.
PriorSpec default_prior(const Dimensions& dims, std::span<const double> peaks,
                        double half_width = 0.25);

// Peaks sorted descending; the order used by default_prior.
std::vector<double> descending(std::span<const double> peaks);

// Sum of the independent component log-densities; phi enters through its
// partial autocorrelations (no Jacobian). -inf outside the support.
double log_prior(const ModelParameters& params, const PriorSpec& spec);
// log_prior without the Gamma term for omega.
double log_prior_excluding_omega(const ModelParameters& params, const PriorSpec& spec);

}  // namespace stocycle
