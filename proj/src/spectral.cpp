#include "stocycle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "stocycle/csv.hpp"

namespace stocycle {

Periodogram periodogram(const TimeSeries& y, bool demean) {
  const std::size_t n = y.size();
  if (n < 4) throw std::invalid_argument("periodogram: need at least 4 observations");
  std::vector<double> x(y.values);
  if (demean) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    for (auto& v : x) v -= mean;
  }
  Periodogram pg;
  pg.demeaned = demean;
  const std::size_t half = n / 2;
  pg.frequencies.resize(half);
  pg.power.resize(half);
  for (std::size_t j = 1; j <= half; ++j) {
    const double lambda = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    double re = 0.0, im = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
      // Exact index reduction keeps the phase argument in [0, 2*pi).
      const double arg = 2.0 * std::numbers::pi * static_cast<double>((j * t) % n) /
                         static_cast<double>(n);
      re += x[t - 1] * std::cos(arg);
      im -= x[t - 1] * std::sin(arg);
    }
    pg.frequencies[j - 1] = lambda;
    pg.power[j - 1] = (re * re + im * im) / static_cast<double>(n);
  }
  return pg;
}

std::vector<double> pick_peaks(const Periodogram& pg, std::size_t k) {
  const auto& pw = pg.power;
  const std::size_t m = pw.size();
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < m; ++i) {
    const bool left = i == 0 || pw[i] > pw[i - 1];
    const bool right = i + 1 == m || pw[i] > pw[i + 1];
    if (m > 1 && left && right) maxima.push_back(i);
  }
  if (maxima.size() < k) {
    throw std::invalid_argument("pick_peaks: requested " + std::to_string(k) +
                                " peaks but the periodogram has " +
                                std::to_string(maxima.size()) + " local maxima");
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](std::size_t a, std::size_t b) { return pw[a] > pw[b]; });
  std::vector<double> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(pg.frequencies[maxima[i]]);
  return out;
}

double cycle_length_years(double lambda, int periods_per_year) {
  return 2.0 * std::numbers::pi / (static_cast<double>(periods_per_year) * lambda);
}

void write_csv(std::ostream& os, const Periodogram& pg) {
  os << "frequency,power\r\n";
  for (std::size_t i = 0; i < pg.power.size(); ++i) {
    os << format_double(pg.frequencies[i]) << ',' << format_double(pg.power[i]) << "\r\n";
  }
}

}  // namespace stocycle
