#include "stocycle/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "stocycle/pacf.hpp"

namespace stocycle {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_size(std::vector<std::string>& out, const char* name, std::size_t got,
                std::size_t want) {
  if (got != want) {
    std::ostringstream os;
    os << name << ": expected " << want << " values, got " << got;
    out.push_back(os.str());
  }
}

}  // namespace

ModelParameters ModelParameters::zeros(const Dimensions& dims) {
  ModelParameters p;
  p.q.assign(dims.k > 0 ? dims.k - 1 : 0, 0.0);
  p.lambda.assign(dims.k, 0.0);
  p.p_shift.assign(dims.k, 0.0);
  p.beta.assign(dims.r + 1, 0.0);
  p.phi.assign(dims.p, 0.0);
  p.a_init.assign(dims.p, 0.0);
  return p;
}

std::string ValidationReport::message() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i];
  }
  return os.str();
}

ValidationReport validate(const ModelParameters& params, const Dimensions& dims, bool ordered) {
  ValidationReport rep;
  auto& v = rep.violations;
  if (dims.k == 0) v.emplace_back("k must be at least 1");
  check_size(v, "q", params.q.size(), dims.k > 0 ? dims.k - 1 : 0);
  check_size(v, "lambda", params.lambda.size(), dims.k);
  check_size(v, "p_shift", params.p_shift.size(), dims.k);
  check_size(v, "beta", params.beta.size(), dims.r + 1);
  check_size(v, "phi", params.phi.size(), dims.p);
  check_size(v, "a_init", params.a_init.size(), dims.p);
  if (!v.empty()) return rep;

  const double scalars[] = {params.a, params.alpha_A, params.alpha_P, params.psi_P, params.omega};
  if (!all_finite(scalars) || !all_finite(params.q) || !all_finite(params.lambda) ||
      !all_finite(params.p_shift) || !all_finite(params.beta) || !all_finite(params.phi) ||
      !all_finite(params.a_init)) {
    v.emplace_back("non-finite parameter value");
    return rep;
  }

  for (std::size_t j = 0; j < dims.k; ++j) {
    const double l = params.lambda[j];
    if (!(l > 0.0 && l < std::numbers::pi)) {
      v.push_back("lambda" + std::to_string(j + 1) + " outside (0, pi)");
    }
    for (std::size_t i = 0; i < j; ++i) {
      if (params.lambda[i] == l) {
        v.push_back("non-distinct frequencies lambda" + std::to_string(i + 1) + " and lambda" +
                    std::to_string(j + 1));
      } else if (ordered && !(params.lambda[i] > l)) {
        v.push_back("frequencies not in descending order at lambda" + std::to_string(j + 1));
      }
    }
  }
  if (!is_stationary(params.phi)) v.emplace_back("non-stationary AR coefficients phi");
  if (!(params.omega > 0.0)) v.emplace_back("omega must be positive");
  if (!(params.psi_P > -1.0 && params.psi_P <= 1.0)) v.emplace_back("psi_P outside (-1, 1]");
  return rep;
}

ValidationReport validate(const ModelParameters& params, const Dimensions& dims,
                          std::span<const std::pair<double, double>> phase_support,
                          bool ordered) {
  auto rep = validate(params, dims, ordered);
  if (!rep.ok()) return rep;
  if (phase_support.size() != dims.k) {
    rep.violations.emplace_back("phase support: expected one interval per frequency");
    return rep;
  }
  for (std::size_t j = 0; j < dims.k; ++j) {
    const auto [lo, hi] = phase_support[j];
    if (!(params.p_shift[j] >= lo && params.p_shift[j] <= hi)) {
      rep.violations.push_back("p" + std::to_string(j + 1) + " outside its support");
    }
  }
  return rep;
}

double trend(double t, std::size_t n, std::span<const double> beta) {
  const double x = t / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = beta.size(); i > 0; --i) acc = acc * x + beta[i - 1];
  return acc;
}

namespace {

// Error-free product: hi + lo == a * b exactly.
inline void two_product(double a, double b, double& hi, double& lo) {
  hi = a * b;
#ifdef FP_FAST_FMA
  lo = std::fma(a, b, -hi);
#else
  constexpr double split = 134217729.0;  // 2^27 + 1
  const double ca = split * a, cb = split * b;
  const double ah = ca - (ca - a), al = a - ah;
  const double bh = cb - (cb - b), bl = b - bh;
  lo = ((ah * bh - hi) + ah * bl + al * bh) + al * bl;
#endif
}

// 2 pi split into three pieces; the leading piece has 24 significant bits so
// that k * hi is exact for every |k| < 2^29.
constexpr double kTwoPiHi = 0x1.921fb6p+2;
constexpr double kTwoPiMid = -0x1.777a5cf72cecep-23;
constexpr double kTwoPiLo = -0x1.9d747f23e32edp-77;

}  // namespace

double cycle_sine(double lambda, double x) {
  // Reducing lambda * x modulo 2 pi is the same as reducing x modulo the
  // period 2 pi / lambda. The product is carried as an unevaluated sum and
  // the reduction uses a three-piece 2 pi, so the reduced argument keeps
  // roughly double precision relative to 2 pi regardless of |x|.
  double p, e;
  two_product(lambda, x, p, e);
  const double k = std::nearbyint(p * (1.0 / (2.0 * std::numbers::pi)));
  const double r = p - k * kTwoPiHi;
  return std::sin((r - k * kTwoPiMid) + (e - k * kTwoPiLo));
}

namespace {

double cyclical_sum(const ModelParameters& params, double t, double P_prev) {
  double s = 0.0;
  for (std::size_t j = 0; j < params.lambda.size(); ++j) {
    s += params.weight(j) * cycle_sine(params.lambda[j], t + params.p_shift[j] + P_prev);
  }
  return s;
}

}  // namespace

double conditional_mean(const ModelParameters& params, double t, double A_prev, double P_prev,
                        std::size_t n) {
  return trend(t, n, params.beta) + (params.a + A_prev) * cyclical_sum(params, t, P_prev);
}

CycleRecursion::CycleRecursion(const ModelParameters& params, std::size_t n_trend)
    : params_(&params), n_trend_(n_trend), a_hist_(std::max<std::size_t>(params.p(), 1), 0.0) {
  std::copy(params.a_init.begin(), params.a_init.end(), a_hist_.begin());
}

double CycleRecursion::mean() const {
  const double t = static_cast<double>(t_);
  return trend(t, n_trend_, params_->beta) + amplitude() * cyclical_sum(*params_, t, phase_);
}

double CycleRecursion::component(std::size_t j) const {
  const double t = static_cast<double>(t_);
  return amplitude() * params_->weight(j) *
         cycle_sine(params_->lambda[j], t + params_->p_shift[j] + phase_);
}

void CycleRecursion::advance(double eps) {
  const auto& phi = params_->phi;
  double a_next = params_->alpha_A * eps;
  for (std::size_t i = 0; i < phi.size(); ++i) a_next += phi[i] * a_hist_[i];
  std::copy_backward(a_hist_.begin(), a_hist_.end() - 1, a_hist_.end());
  a_hist_.front() = a_next;
  phase_ = params_->psi_P * phase_ + params_->alpha_P * eps;
  ++t_;
}

LatentPath filter(const ModelParameters& params, const TimeSeries& y) {
  if (auto rep = validate(params, params.dims()); !rep.ok()) {
    throw std::invalid_argument("filter: invalid parameters: " + rep.message());
  }
  const std::size_t n = y.size();
  LatentPath out;
  out.A.resize(n);
  out.P.resize(n);
  out.eps.resize(n);
  out.m.resize(n);
  CycleRecursion rec(params, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = rec.mean();
    const double e = y.values[i] - m;
    rec.advance(e);
    out.m[i] = m;
    out.eps[i] = e;
    out.A[i] = rec.amplitude_deviation();
    out.P[i] = rec.phase();
  }
  return out;
}

double sum_squared_residuals(const ModelParameters& params, const TimeSeries& y) {
  CycleRecursion rec(params, y.size());
  double ss = 0.0;
  for (double v : y.values) {
    const double e = v - rec.mean();
    ss += e * e;
    rec.advance(e);
  }
  return ss;
}

double log_likelihood(const ModelParameters& params, const TimeSeries& y) {
  const auto dims = params.dims();
  if (params.q.size() + 1 != dims.k || params.p_shift.size() != dims.k ||
      params.a_init.size() != dims.p || params.beta.empty()) {
    throw std::invalid_argument("log_likelihood: parameter vectors have inconsistent lengths");
  }
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!validate(params, dims).ok()) return neg_inf;

  const std::size_t n = y.size();
  const double ss = sum_squared_residuals(params, y);
  const double ll = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi / params.omega) -
                    0.5 * params.omega * ss;
  return std::isfinite(ll) ? ll : neg_inf;
}

namespace {

template <class Draw>
Simulation run_forward(const ModelParameters& params, std::size_t n, Draw&& draw) {
  if (auto rep = validate(params, params.dims()); !rep.ok()) {
    throw std::invalid_argument("simulate: invalid parameters: " + rep.message());
  }
  Simulation sim;
  sim.series.values.resize(n);
  auto& path = sim.path;
  path.A.resize(n);
  path.P.resize(n);
  path.eps.resize(n);
  path.m.resize(n);
  CycleRecursion rec(params, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = rec.mean();
    const double y = m + draw(i);
    // Realised residual; equals the drawn innovation up to rounding of y.
    const double e = y - m;
    rec.advance(e);
    sim.series.values[i] = y;
    path.m[i] = m;
    path.eps[i] = e;
    path.A[i] = rec.amplitude_deviation();
    path.P[i] = rec.phase();
  }
  return sim;
}

}  // namespace

Simulation simulate(const ModelParameters& params, std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("simulate: n must be at least 1");
  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / params.omega));
  return run_forward(params, n, [&](std::size_t) { return normal(rng); });
}

Simulation simulate(const ModelParameters& params, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return simulate(params, n, rng);
}

Simulation simulate(const ModelParameters& params, std::span<const double> innovations) {
  if (innovations.empty()) throw std::invalid_argument("simulate: n must be at least 1");
  return run_forward(params, innovations.size(), [&](std::size_t i) { return innovations[i]; });
}

std::vector<std::string> parameter_names(const Dimensions& dims) {
  std::vector<std::string> names{"a"};
  for (std::size_t j = 2; j <= dims.k; ++j) names.push_back("q" + std::to_string(j));
  for (std::size_t j = 1; j <= dims.k; ++j) names.push_back("lambda" + std::to_string(j));
  for (std::size_t j = 1; j <= dims.k; ++j) names.push_back("p" + std::to_string(j));
  for (std::size_t i = 0; i <= dims.r; ++i) names.push_back("beta" + std::to_string(i));
  for (std::size_t i = 1; i <= dims.p; ++i) names.push_back("phi" + std::to_string(i));
  names.emplace_back("alphaA");
  names.emplace_back("alphaP");
  names.emplace_back("omega");
  names.emplace_back("A0");
  for (std::size_t i = 1; i < dims.p; ++i) names.push_back("A-" + std::to_string(i));
  if (dims.p == 0) names.pop_back();
  return names;
}

std::vector<double> to_flat(const ModelParameters& params) {
  std::vector<double> v{params.a};
  v.insert(v.end(), params.q.begin(), params.q.end());
  v.insert(v.end(), params.lambda.begin(), params.lambda.end());
  v.insert(v.end(), params.p_shift.begin(), params.p_shift.end());
  v.insert(v.end(), params.beta.begin(), params.beta.end());
  v.insert(v.end(), params.phi.begin(), params.phi.end());
  v.push_back(params.alpha_A);
  v.push_back(params.alpha_P);
  v.push_back(params.omega);
  v.insert(v.end(), params.a_init.begin(), params.a_init.end());
  return v;
}

ModelParameters from_flat(std::span<const double> values, const Dimensions& dims, double psi_P) {
  const std::size_t want = 1 + (dims.k - 1) + 2 * dims.k + (dims.r + 1) + 2 * dims.p + 3;
  if (dims.k == 0 || values.size() != want) {
    throw std::invalid_argument("from_flat: expected " + std::to_string(want) + " values");
  }
  ModelParameters p;
  auto it = values.begin();
  auto take = [&](std::size_t count) {
    std::vector<double> out(it, it + static_cast<std::ptrdiff_t>(count));
    it += static_cast<std::ptrdiff_t>(count);
    return out;
  };
  p.a = *it++;
  p.q = take(dims.k - 1);
  p.lambda = take(dims.k);
  p.p_shift = take(dims.k);
  p.beta = take(dims.r + 1);
  p.phi = take(dims.p);
  p.alpha_A = *it++;
  p.alpha_P = *it++;
  p.omega = *it++;
  p.a_init = take(dims.p);
  p.psi_P = psi_P;
  return p;
}

std::map<std::string, double> to_record(const ModelParameters& params) {
  const auto names = parameter_names(params.dims());
  const auto values = to_flat(params);
  std::map<std::string, double> rec;
  for (std::size_t i = 0; i < names.size(); ++i) rec[names[i]] = values[i];
  if (params.psi_P != 1.0) rec["psiP"] = params.psi_P;
  return rec;
}

ModelParameters from_record(const std::map<std::string, double>& record, const Dimensions& dims) {
  const auto names = parameter_names(dims);
  std::vector<double> values;
  values.reserve(names.size());
  for (const auto& name : names) {
    auto it = record.find(name);
    if (it == record.end()) throw std::invalid_argument("missing parameter '" + name + "'");
    values.push_back(it->second);
  }
  auto psi = record.find("psiP");
  return from_flat(values, dims, psi == record.end() ? 1.0 : psi->second);
}

}  // namespace stocycle
