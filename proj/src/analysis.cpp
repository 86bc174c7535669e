#include "stocycle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace stocycle {

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval hpd_interval(std::span<const double> sorted, double level) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("hpd: empty sample");
  const auto m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9)), 1, n);
  Interval best{sorted.front(), sorted[m - 1]};
  for (std::size_t i = 1; i + m <= n; ++i) {
    if (sorted[i + m - 1] - sorted[i] < best.width()) best = {sorted[i], sorted[i + m - 1]};
  }
  return best;
}

std::vector<double> kde_modes(std::span<const double> draws, double threshold) {
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double iqr = quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) return {quantile_sorted(x, 0.5)};
  const double h = 0.9 * spread * std::pow(n, -0.2);

  // Linear binning onto a regular grid, then a discrete Gaussian convolution.
  constexpr std::size_t grid = 1024;
  const double lo = x.front() - 3.0 * h;
  const double hi = x.back() + 3.0 * h;
  const double dx = (hi - lo) / static_cast<double>(grid - 1);
  std::vector<double> counts(grid, 0.0);
  for (double v : x) {
    const double pos = (v - lo) / dx;
    const auto i = std::min(static_cast<std::size_t>(pos), grid - 2);
    const double w = pos - static_cast<double>(i);
    counts[i] += 1.0 - w;
    counts[i + 1] += w;
  }
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(4.0 * h / dx));
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
    const double u = static_cast<double>(d) * dx / h;
    kernel[static_cast<std::size_t>(d + reach)] = std::exp(-0.5 * u * u);
  }
  std::vector<double> dens(grid, 0.0);
  for (std::size_t i = 0; i < grid; ++i) {
    if (counts[i] == 0.0) continue;
    const auto si = static_cast<std::ptrdiff_t>(i);
    const auto from = std::max<std::ptrdiff_t>(0, si - reach);
    const auto to = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(grid) - 1, si + reach);
    for (std::ptrdiff_t g = from; g <= to; ++g) {
      dens[static_cast<std::size_t>(g)] += counts[i] * kernel[static_cast<std::size_t>(g - si + reach)];
    }
  }
  const double top = *std::max_element(dens.begin(), dens.end());
  std::vector<std::pair<double, double>> peaks;  // (density, location)
  for (std::size_t i = 1; i + 1 < grid; ++i) {
    if (dens[i] >= threshold * top && dens[i] > dens[i - 1] && dens[i] >= dens[i + 1]) {
      // Parabolic refinement through the three neighbouring ordinates.
      const double den = dens[i - 1] - 2.0 * dens[i] + dens[i + 1];
      const double shift = den < 0.0 ? 0.5 * (dens[i - 1] - dens[i + 1]) / den : 0.0;
      peaks.emplace_back(dens[i], lo + (static_cast<double>(i) + shift) * dx);
    }
  }
  if (peaks.empty()) {
    const auto i = static_cast<std::size_t>(std::max_element(dens.begin(), dens.end()) - dens.begin());
    return {lo + static_cast<double>(i) * dx};
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  std::vector<double> out;
  for (const auto& p : peaks) out.push_back(p.second);
  return out;
}

ParameterSummary summarize(std::span<const double> draws, double level) {
  if (draws.size() < 100) throw std::invalid_argument("summarize: at least 100 draws are required");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("summarize: level must lie in (0, 1)");
  std::vector<double> x(draws.begin(), draws.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  ParameterSummary s;
  s.level = level;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(ss / (n - 1.0));
  s.median = quantile_sorted(x, 0.5);
  s.quantile_ci = {quantile_sorted(x, 0.5 * (1.0 - level)), quantile_sorted(x, 0.5 * (1.0 + level))};
  s.hpd = hpd_interval(x, level);
  s.modes = kde_modes(x);
  if (x.front() == x.back()) {
    s.mean = s.median = x.front();
    s.std_dev = 0.0;
    s.modes = {x.front()};
  }
  return s;
}

ParameterSummary derived_summary(std::span<const double> draws,
                                 const std::function<double(double)>& map, double level) {
  std::vector<double> mapped(draws.size());
  std::transform(draws.begin(), draws.end(), mapped.begin(), map);
  return summarize(mapped, level);
}

// ---------------------------------------------------------------------------

Band pointwise_band(const Eigen::MatrixXd& paths, double level) {
  Band b;
  std::vector<double> col(static_cast<std::size_t>(paths.rows()));
  for (Eigen::Index t = 0; t < paths.cols(); ++t) {
    for (Eigen::Index m = 0; m < paths.rows(); ++m) col[static_cast<std::size_t>(m)] = paths(m, t);
    std::sort(col.begin(), col.end());
    b.lower.push_back(quantile_sorted(col, 0.5 * (1.0 - level)));
    b.median.push_back(quantile_sorted(col, 0.5));
    b.upper.push_back(quantile_sorted(col, 0.5 * (1.0 + level)));
  }
  return b;
}

std::vector<std::size_t> spaced_rows(std::size_t total, std::size_t max_draws) {
  std::vector<std::size_t> rows;
  if (max_draws == 0 || max_draws >= total) {
    rows.resize(total);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  for (std::size_t i = 0; i < max_draws; ++i) rows.push_back(i * total / max_draws);
  return rows;
}

namespace {

std::vector<ModelParameters> chain_draws(const ChainOutput& chain, std::size_t max_draws) {
  std::vector<ModelParameters> out;
  for (auto r : spaced_rows(chain.size(), max_draws)) out.push_back(chain.draw(r));
  return out;
}

}  // namespace

CycleDecomposition decompose(std::span<const ModelParameters> draws, const TimeSeries& y,
                             double level) {
  if (draws.empty()) throw std::invalid_argument("decompose: no draws");
  const auto M = static_cast<Eigen::Index>(draws.size());
  const auto n = static_cast<Eigen::Index>(y.size());
  CycleDecomposition d;
  d.n = y.size();
  d.k = draws.front().k();
  d.level = level;
  d.components.assign(d.k, Eigen::MatrixXd(M, n));
  d.amplitude.resize(M, n);
  d.phase.resize(M, n);
  d.trend.resize(M, n);
  d.residual.resize(M, n);
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto& params = draws[static_cast<std::size_t>(m)];
    if (params.k() != d.k) throw std::invalid_argument("decompose: draws disagree on k");
    if (auto rep = validate(params, params.dims()); !rep.ok()) {
      throw std::invalid_argument("decompose: invalid draw: " + rep.message());
    }
    CycleRecursion rec(params, y.size());
    for (Eigen::Index t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < d.k; ++j) d.components[j](m, t) = rec.component(j);
      d.amplitude(m, t) = rec.amplitude();
      d.phase(m, t) = rec.phase();
      d.trend(m, t) = trend(static_cast<double>(t + 1), y.size(), params.beta);
      const double eps = y.values[static_cast<std::size_t>(t)] - rec.mean();
      d.residual(m, t) = eps;
      rec.advance(eps);
    }
  }
  for (const auto& c : d.components) d.component_bands.push_back(pointwise_band(c, level));
  d.amplitude_band = pointwise_band(d.amplitude, level);
  d.phase_band = pointwise_band(d.phase, level);
  return d;
}

CycleDecomposition decompose(const ChainOutput& chain, const TimeSeries& y, double level,
                             std::size_t max_draws) {
  const auto draws = chain_draws(chain, max_draws);
  return decompose(draws, y, level);
}

// ---------------------------------------------------------------------------

double Ellipse::distance(const Eigen::Vector2d& x) const {
  const Eigen::Vector2d d = x - center;
  return std::sqrt(d.dot(shape.ldlt().solve(d)));
}

Ellipse quantile_ellipsoid(std::span<const Eigen::Vector2d> sample, double level) {
  if (sample.size() < 100) throw std::invalid_argument("quantile_ellipsoid: at least 100 points are required");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("quantile_ellipsoid: level must lie in (0, 1)");
  const auto n = static_cast<double>(sample.size());
  Ellipse e;
  e.level = level;
  for (const auto& p : sample) e.center += p;
  e.center /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : sample) cov += (p - e.center) * (p - e.center).transpose();
  cov /= (n - 1.0);
  const double det = cov.determinant();
  if (!(det > 1e-14 * std::max(cov(0, 0) * cov(1, 1), std::numeric_limits<double>::min()))) {
    throw std::invalid_argument("quantile_ellipsoid: singular sample covariance");
  }
  e.shape = cov;
  const Eigen::Matrix2d inv = cov.inverse();
  std::vector<double> dist;
  dist.reserve(sample.size());
  for (const auto& p : sample) {
    const Eigen::Vector2d d = p - e.center;
    dist.push_back(std::sqrt(d.dot(inv * d)));
  }
  std::sort(dist.begin(), dist.end());
  const auto idx = static_cast<std::size_t>(std::ceil(level * n - 1e-9)) - 1;
  e.radius = dist[std::min(idx, dist.size() - 1)];
  return e;
}

int quadrant(double delta, double level) {
  if (delta == 0.0 || level == 0.0 || std::isnan(delta) || std::isnan(level)) return 0;
  if (level > 0.0) return delta > 0.0 ? 1 : 2;
  return delta < 0.0 ? 3 : 4;
}

ClockSeries clock(const CycleDecomposition& decomp, std::size_t j,
                  std::span<const double> ellipse_levels) {
  if (j >= decomp.k) throw std::invalid_argument("clock: frequency index out of range");
  if (decomp.n < 2) throw std::invalid_argument("clock: at least two observations are required");
  const auto& C = decomp.components[j];
  const auto M = static_cast<std::size_t>(C.rows());
  ClockSeries out;
  out.frequency = j;
  std::vector<double> dl(M), lv(M);
  std::vector<Eigen::Vector2d> pts(M);
  for (std::size_t t = 1; t < decomp.n; ++t) {
    std::array<double, 4> counts{};
    double ties = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const auto r = static_cast<Eigen::Index>(m);
      const auto c = static_cast<Eigen::Index>(t);
      dl[m] = C(r, c) - C(r, c - 1);
      lv[m] = C(r, c);
      pts[m] = {dl[m], lv[m]};
      const int q = quadrant(dl[m], lv[m]);
      if (q == 0) {
        ties += 1.0;
      } else {
        counts[static_cast<std::size_t>(q - 1)] += 1.0;
      }
    }
    for (auto& v : counts) v /= static_cast<double>(M);
    out.time.push_back(t + 1);
    out.quadrant_probability.push_back(counts);
    out.tie_mass.push_back(ties / static_cast<double>(M));
    std::sort(dl.begin(), dl.end());
    std::sort(lv.begin(), lv.end());
    out.delta_median.push_back(quantile_sorted(dl, 0.5));
    out.level_median.push_back(quantile_sorted(lv, 0.5));
    std::vector<Ellipse> ells;
    for (double level : ellipse_levels) ells.push_back(quantile_ellipsoid(pts, level));
    out.ellipses.push_back(std::move(ells));
  }
  return out;
}

// ---------------------------------------------------------------------------

Forecast forecast(std::span<const ModelParameters> draws, const TimeSeries& y, std::size_t horizon,
                  std::size_t paths_per_draw, std::mt19937_64& rng, double level) {
  if (horizon < 1) throw std::invalid_argument("forecast: horizon must be at least 1");
  if (paths_per_draw < 1) throw std::invalid_argument("forecast: paths_per_draw must be at least 1");
  if (draws.empty()) throw std::invalid_argument("forecast: no draws");
  const std::size_t total = draws.size() * paths_per_draw;
  const auto H = static_cast<Eigen::Index>(horizon);
  Eigen::MatrixXd obs(static_cast<Eigen::Index>(total), H);
  Eigen::MatrixXd cond(static_cast<Eigen::Index>(total), H);
  double noise_var = 0.0;
  std::normal_distribution<double> normal;
  Eigen::Index row = 0;
  for (const auto& params : draws) {
    if (auto rep = validate(params, params.dims()); !rep.ok()) {
      throw std::invalid_argument("forecast: invalid draw: " + rep.message());
    }
    CycleRecursion base(params, y.size());
    for (double v : y.values) base.advance(v - base.mean());
    const double sd = std::sqrt(1.0 / params.omega);
    noise_var += static_cast<double>(paths_per_draw) / params.omega;
    for (std::size_t path = 0; path < paths_per_draw; ++path, ++row) {
      CycleRecursion rec = base;
      for (Eigen::Index h = 0; h < H; ++h) {
        const double m = rec.mean();
        const double eps = sd * normal(rng);
        cond(row, h) = m;
        obs(row, h) = m + eps;
        rec.advance(eps);
      }
    }
  }
  noise_var /= static_cast<double>(total);

  Forecast f;
  f.n = y.size();
  f.level = level;
  const Band band = pointwise_band(obs, level);
  f.median = band.median;
  f.lower = band.lower;
  f.upper = band.upper;
  for (Eigen::Index h = 0; h < H; ++h) {
    const double mean = cond.col(h).mean();
    const double var_m = total > 1 ? (cond.col(h).array() - mean).square().sum() / static_cast<double>(total) : 0.0;
    f.mean.push_back(mean);
    f.variance.push_back(noise_var + var_m);
  }
  return f;
}

Forecast forecast(const ChainOutput& chain, const TimeSeries& y, std::size_t horizon,
                  std::size_t paths_per_draw, std::mt19937_64& rng, double level,
                  std::size_t max_draws) {
  const auto draws = chain_draws(chain, max_draws);
  return forecast(draws, y, horizon, paths_per_draw, rng, level);
}

}  // namespace stocycle
