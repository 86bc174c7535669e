#pragma once

// Posterior summaries built from chain draws: parameter tables, cycle
// decompositions with credible bands, cycle clocks and forecasts.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "stocycle/model.hpp"
#include "stocycle/sampler.hpp"

namespace stocycle {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

struct ParameterSummary {
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> modes;  // ordered by decreasing density
  double std_dev = 0.0;
  double level = 0.95;
  Interval quantile_ci;
  Interval hpd;
};

// Type-7 empirical quantile of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double prob);

// Shortest interval containing ceil(level * n) of the sorted draws.
Interval hpd_interval(std::span<const double> sorted, double level);

// Local maxima of a Gaussian kernel density estimate (Silverman bandwidth)
// whose height is at least `threshold` times the global maximum.
std::vector<double> kde_modes(std::span<const double> draws, double threshold = 0.1);

// Throws std::invalid_argument with fewer than 100 draws or a level outside (0, 1).
ParameterSummary summarize(std::span<const double> draws, double level = 0.95);
ParameterSummary derived_summary(std::span<const double> draws,
                                 const std::function<double(double)>& map, double level = 0.95);

// ---------------------------------------------------------------------------

struct Band {
  std::vector<double> lower, median, upper;
};

// Pointwise quantiles over rows of a (draws x time) matrix.
Band pointwise_band(const Eigen::MatrixXd& paths, double level);

struct CycleDecomposition {
  std::size_t n = 0;
  std::size_t k = 0;
  double level = 0.95;
  std::vector<Eigen::MatrixXd> components;  // [j](draw, t): C_{j,t}
  Eigen::MatrixXd amplitude;                // (draw, t): a + A_{t-1}
  Eigen::MatrixXd phase;                    // (draw, t): P_{t-1}
  Eigen::MatrixXd trend;                    // (draw, t): mu(t)
  Eigen::MatrixXd residual;                 // (draw, t): eps_t
  std::vector<Band> component_bands;
  Band amplitude_band;
  Band phase_band;

  std::size_t draws() const { return static_cast<std::size_t>(amplitude.rows()); }
};

// Filters y under every parameter draw and splits it into its components.
CycleDecomposition decompose(std::span<const ModelParameters> draws, const TimeSeries& y,
                             double level = 0.95);
// Uses at most `max_draws` rows of the chain, evenly spaced (0 keeps all).
CycleDecomposition decompose(const ChainOutput& chain, const TimeSeries& y, double level = 0.95,
                             std::size_t max_draws = 0);

// ---------------------------------------------------------------------------

struct Ellipse {
  double level = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Matrix2d shape = Eigen::Matrix2d::Identity();
  double radius = 0.0;  // Mahalanobis distance

  double distance(const Eigen::Vector2d& x) const;
  bool contains(const Eigen::Vector2d& x) const { return distance(x) <= radius; }
};

// Throws std::invalid_argument with fewer than 100 points, a level outside
// (0, 1) or a singular sample covariance.
Ellipse quantile_ellipsoid(std::span<const Eigen::Vector2d> sample, double level);

// Quadrants of (dC, C): 1 expansion (+,+), 2 downturn (-,+), 3 contraction
// (-,-), 4 recovery (+,-). Points on an axis belong to none.
int quadrant(double delta, double level);

struct ClockSeries {
  std::size_t frequency = 0;            // 0-based
  std::vector<std::size_t> time;        // t = 2..n
  std::vector<double> delta_median;     // Me(C_t - C_{t-1} | y)
  std::vector<double> level_median;     // Me(C_t | y)
  std::vector<std::array<double, 4>> quadrant_probability;
  std::vector<double> tie_mass;
  std::vector<std::vector<Ellipse>> ellipses;  // [time][level]
};

ClockSeries clock(const CycleDecomposition& decomp, std::size_t j,
                  std::span<const double> ellipse_levels = {});

// ---------------------------------------------------------------------------

struct Forecast {
  std::size_t n = 0;  // last observed time
  double level = 0.95;
  std::vector<double> mean;      // E(y_{n+h} | y)
  std::vector<double> median;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> variance;  // Var(y_{n+h} | y)
};

// For each draw: filters y, then simulates `paths_per_draw` continuations with
// fresh N(0, 1/omega) innovations. The mean and variance are computed from the
// conditional means of y_{n+h} plus the innovation variance; quantiles come
// from the simulated observations.
Forecast forecast(std::span<const ModelParameters> draws, const TimeSeries& y, std::size_t horizon,
                  std::size_t paths_per_draw, std::mt19937_64& rng, double level = 0.95);
Forecast forecast(const ChainOutput& chain, const TimeSeries& y, std::size_t horizon,
                  std::size_t paths_per_draw, std::mt19937_64& rng, double level = 0.95,
                  std::size_t max_draws = 0);

// Evenly spaced row indices selecting at most `max_draws` of `total` (0 keeps all).
std::vector<std::size_t> spaced_rows(std::size_t total, std::size_t max_draws);

}  // namespace stocycle
