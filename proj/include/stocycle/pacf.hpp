#pragma once

#include <span>
#include <vector>

namespace stocycle {

// Partial-autocorrelation parameterisation of a stationary AR(p).
//
// The forward (Durbin-Levinson) recursion maps rho in (-1, 1)^p one-to-one onto
// the stationarity region:
//   phi^(k)_k = rho_k,  phi^(k)_i = phi^(k-1)_i - rho_k phi^(k-1)_{k-i}.
// The step-down recursion inverts it and doubles as a stationarity test.

// Throws std::invalid_argument if any |rho_i| >= 1.
std::vector<double> pacf_to_ar(std::span<const double> rho);

// Throws std::invalid_argument if phi is not stationary.
std::vector<double> ar_to_pacf(std::span<const double> phi);

// True when all roots of 1 - phi_1 z - ... - phi_p z^p lie outside the unit circle.
bool is_stationary(std::span<const double> phi);

}  // namespace stocycle
