#include "stocycle/pacf.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace stocycle {

namespace {

std::optional<std::vector<double>> step_down(std::span<const double> phi) {
  // Extended precision: the division by 1 - r^2 amplifies rounding near |r| = 1.
  std::vector<long double> cur(phi.begin(), phi.end());
  std::vector<double> rho(cur.size());
  for (std::size_t k = cur.size(); k > 0; --k) {
    const long double r = cur[k - 1];
    if (!std::isfinite(r) || std::abs(r) >= 1.0L) return std::nullopt;
    rho[k - 1] = static_cast<double>(r);
    const long double denom = (1.0L - r) * (1.0L + r);
    std::vector<long double> prev(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      prev[i] = (cur[i] + r * cur[k - 2 - i]) / denom;
    }
    cur = std::move(prev);
  }
  return rho;
}

}  // namespace

std::vector<double> pacf_to_ar(std::span<const double> rho) {
  std::vector<long double> phi;
  phi.reserve(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const long double r = rho[k];
    if (!std::isfinite(r) || std::abs(r) >= 1.0L) {
      throw std::invalid_argument("pacf_to_ar: partial autocorrelation outside (-1, 1)");
    }
    std::vector<long double> next(k + 1);
    for (std::size_t i = 0; i < k; ++i) next[i] = phi[i] - r * phi[k - 1 - i];
    next[k] = r;
    phi = std::move(next);
  }
  return {phi.begin(), phi.end()};
}

std::vector<double> ar_to_pacf(std::span<const double> phi) {
  auto rho = step_down(phi);
  if (!rho) throw std::invalid_argument("ar_to_pacf: AR coefficients are not stationary");
  return *rho;
}

bool is_stationary(std::span<const double> phi) { return step_down(phi).has_value(); }

}  // namespace stocycle
