#include "stocycle/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace stocycle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_beta_fn(double b, double c) { return std::lgamma(b) + std::lgamma(c) - std::lgamma(b + c); }

}  // namespace

double beta_on_interval_logpdf(double x, double b, double c, double lo, double hi) {
  if (!(x > lo && x < hi)) return kNegInf;
  const double width = hi - lo;
  const double u = (x - lo) / width;
  // Normaliser (hi - lo)^{-1}: the density integrates to one on (lo, hi).
  return (b - 1.0) * std::log(u) + (c - 1.0) * std::log1p(-u) - std::log(width) -
         log_beta_fn(b, c);
}

double normal_logpdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * d * d / variance;
}

double gamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

double BetaInterval::logpdf(double x) const { return beta_on_interval_logpdf(x, b, c, lo, hi); }
double NormalPrior::logpdf(double x) const { return normal_logpdf(x, mean, variance); }
double GammaPrior::logpdf(double x) const { return gamma_logpdf(x, shape, scale); }

std::vector<std::pair<double, double>> PriorSpec::phase_bounds() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : p_shift) out.emplace_back(s.lo, s.hi);
  return out;
}

std::vector<std::string> check(const PriorSpec& spec, const Dimensions& dims) {
  std::vector<std::string> out;
  auto beta_ok = [&](const BetaInterval& bi, const std::string& name) {
    if (!(bi.b > 0.0 && bi.c > 0.0)) out.push_back(name + ": Beta shapes must be positive");
    if (!(std::isfinite(bi.lo) && std::isfinite(bi.hi) && bi.lo < bi.hi)) {
      out.push_back(name + ": support must be finite with lower < upper");
    }
  };
  auto normal_ok = [&](const NormalPrior& np, const std::string& name) {
    if (!(np.variance > 0.0) || !std::isfinite(np.mean)) {
      out.push_back(name + ": Normal variance must be positive");
    }
  };
  if (spec.lambda.size() != dims.k) out.emplace_back("lambda prior: expected one entry per frequency");
  if (spec.p_shift.size() != dims.k) out.emplace_back("p prior: expected one entry per frequency");
  for (std::size_t j = 0; j < spec.lambda.size(); ++j) {
    const auto name = "lambda" + std::to_string(j + 1);
    beta_ok(spec.lambda[j], name);
    if (spec.lambda[j].lo < 0.0 || spec.lambda[j].hi > std::numbers::pi) {
      out.push_back(name + ": support must lie within [0, pi]");
    }
    if (j > 0 && !(spec.lambda[j - 1].lo > spec.lambda[j].hi)) {
      out.push_back(name + ": support must lie strictly below that of lambda" + std::to_string(j));
    }
  }
  for (std::size_t j = 0; j < spec.p_shift.size(); ++j) {
    const auto name = "p" + std::to_string(j + 1);
    beta_ok(spec.p_shift[j], name);
    if (j < spec.lambda.size() && spec.lambda[j].lo > 0.0) {
      const double need = std::numbers::pi / spec.lambda[j].lo;
      if (spec.p_shift[j].hi - spec.p_shift[j].lo < need * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << name << ": support width must be at least pi/lower(lambda" << j + 1 << ") = " << need;
        out.push_back(os.str());
      }
    }
  }
  normal_ok(spec.a, "a");
  normal_ok(spec.q, "q");
  normal_ok(spec.beta, "beta");
  normal_ok(spec.a_init, "A initial conditions");
  beta_ok(spec.alpha_A, "alphaA");
  beta_ok(spec.alpha_P, "alphaP");
  if (!(spec.omega.shape > 0.0 && spec.omega.scale > 0.0)) {
    out.emplace_back("omega: Gamma parameters must be positive");
  }
  beta_ok(spec.rho, "rho");
  if (spec.rho.lo < -1.0 || spec.rho.hi > 1.0) out.emplace_back("rho: support must lie within (-1, 1)");
  return out;
}

std::vector<double> descending(std::span<const double> peaks) {
  std::vector<double> out(peaks.begin(), peaks.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

PriorSpec default_prior(const Dimensions& dims, std::span<const double> peaks, double half_width) {
  if (peaks.size() != dims.k) throw std::invalid_argument("default_prior: need one peak per frequency");
  if (!(half_width > 0.0 && half_width < 1.0)) {
    throw std::invalid_argument("default_prior: half_width must lie in (0, 1)");
  }
  const auto freq = descending(peaks);
  for (std::size_t j = 1; j < freq.size(); ++j) {
    if (!(freq[j - 1] > freq[j])) throw std::invalid_argument("default_prior: peaks must be distinct");
  }
  PriorSpec spec;
  constexpr double gap = 1e-9;
  for (std::size_t j = 0; j < freq.size(); ++j) {
    double lo = std::max(freq[j] * (1.0 - half_width), gap);
    double hi = std::min(freq[j] * (1.0 + half_width), std::numbers::pi);
    if (j > 0) {
      const double mid = 0.5 * (freq[j - 1] + freq[j]);
      hi = std::min(hi, mid - gap);
    }
    if (j + 1 < freq.size()) {
      const double mid = 0.5 * (freq[j] + freq[j + 1]);
      lo = std::max(lo, mid + gap);
    }
    spec.lambda.push_back({1.0, 1.0, lo, hi});
    spec.p_shift.push_back({1.0, 1.0, 0.0, std::numbers::pi / lo});
  }
  return spec;
}

double log_prior_excluding_omega(const ModelParameters& params, const PriorSpec& spec) {
  const auto k = params.k();
  if (spec.lambda.size() != k || spec.p_shift.size() != k) {
    throw std::invalid_argument("log_prior: prior and parameters disagree on k");
  }
  double lp = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    lp += spec.lambda[j].logpdf(params.lambda[j]);
    lp += spec.p_shift[j].logpdf(params.p_shift[j]);
  }
  if (!std::isfinite(lp)) return kNegInf;
  for (double qj : params.q) lp += spec.q.logpdf(qj);
  for (double b : params.beta) lp += spec.beta.logpdf(b);
  for (double a0 : params.a_init) lp += spec.a_init.logpdf(a0);
  lp += spec.a.logpdf(params.a);
  lp += spec.alpha_A.logpdf(params.alpha_A);
  lp += spec.alpha_P.logpdf(params.alpha_P);
  if (!is_stationary(params.phi)) return kNegInf;
  for (double r : ar_to_pacf(params.phi)) lp += spec.rho.logpdf(r);
  return std::isfinite(lp) ? lp : kNegInf;
}

double log_prior(const ModelParameters& params, const PriorSpec& spec) {
  const double lp = log_prior_excluding_omega(params, spec);
  if (!std::isfinite(lp)) return kNegInf;
  const double lw = spec.omega.logpdf(params.omega);
  return std::isfinite(lw) ? lp + lw : kNegInf;
}

}  // namespace stocycle
