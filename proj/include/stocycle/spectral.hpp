#pragma once

#include <iosfwd>
#include <vector>

#include "stocycle/model.hpp"

namespace stocycle {

struct Periodogram {
  std::vector<double> frequencies;  // 2*pi*j/n, j = 1..floor(n/2)
  std::vector<double> power;        // (1/n) |sum_t y_t e^{-i lambda t}|^2
  bool demeaned = false;
};

// Raw periodogram at the Fourier frequencies. Throws std::invalid_argument for n < 4.
Periodogram periodogram(const TimeSeries& y, bool demean);

// The k strict local maxima with the largest power, ordered by descending
// power (ties: lower frequency first). An end ordinate counts as a local
// maximum when it exceeds its single neighbour. Throws std::invalid_argument
// when fewer than k maxima exist.
std::vector<double> pick_peaks(const Periodogram& pg, std::size_t k);

// Cycle length in years, 2*pi / (periods_per_year * lambda).
double cycle_length_years(double lambda, int periods_per_year);

// Two-column CSV with header "frequency,power".
void write_csv(std::ostream& os, const Periodogram& pg);

}  // namespace stocycle
