#include "stocycle/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stocycle/errors.hpp"

namespace stocycle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double to_log_odds(double x, double lo, double hi) {
  if (!(x > lo && x < hi)) throw std::domain_error("to_log_odds: value outside the open support");
  return std::log(x - lo) - std::log(hi - x);
}

double from_log_odds(double z, double lo, double hi) {
  const double w = hi - lo;
  if (z > 0.0) return hi - w / (1.0 + std::exp(z));
  return lo + w / (1.0 + std::exp(-z));
}

double log_odds_log_jacobian(double z, double lo, double hi) {
  return std::log(hi - lo) - softplus(z) - softplus(-z);
}

// ---------------------------------------------------------------------------

SamplingSpace::SamplingSpace(const Dimensions& dims, PriorSpec prior)
    : dims_(dims), prior_(std::move(prior)) {
  if (auto issues = check(prior_, dims_); !issues.empty()) {
    std::string msg = "invalid prior:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw std::invalid_argument(msg);
  }
  auto push = [&](std::vector<std::size_t>& group, std::string name, bool bounded, double lo,
                  double hi) {
    group.push_back(coords_.size());
    coords_.push_back({std::move(name), bounded, lo, hi});
  };
  for (std::size_t j = 0; j < dims.k; ++j) {
    push(groups_.lambda, "lambda" + std::to_string(j + 1), true, prior_.lambda[j].lo,
         prior_.lambda[j].hi);
  }
  for (std::size_t j = 0; j < dims.k; ++j) {
    push(groups_.p_shift, "p" + std::to_string(j + 1), true, prior_.p_shift[j].lo,
         prior_.p_shift[j].hi);
  }
  push(groups_.amplitude, "a", false, 0, 0);
  for (std::size_t j = 2; j <= dims.k; ++j) push(groups_.amplitude, "q" + std::to_string(j), false, 0, 0);
  for (std::size_t i = 0; i <= dims.r; ++i) push(groups_.beta, "beta" + std::to_string(i), false, 0, 0);
  for (std::size_t i = 1; i <= dims.p; ++i) {
    push(groups_.rho, "rho" + std::to_string(i), true, prior_.rho.lo, prior_.rho.hi);
  }
  push(groups_.alpha, "alphaA", true, prior_.alpha_A.lo, prior_.alpha_A.hi);
  push(groups_.alpha, "alphaP", true, prior_.alpha_P.lo, prior_.alpha_P.hi);
  for (std::size_t i = 0; i < dims.p; ++i) {
    push(groups_.a_init, i == 0 ? std::string("A0") : "A-" + std::to_string(i), false, 0, 0);
  }
}

std::vector<std::string> SamplingSpace::names() const {
  std::vector<std::string> out;
  for (const auto& c : coords_) out.push_back(c.name);
  return out;
}

std::vector<double> SamplingSpace::to_sampling(const ModelParameters& params) const {
  if (params.dims() != dims_ || params.q.size() + 1 != dims_.k || params.a_init.size() != dims_.p) {
    throw std::invalid_argument("to_sampling: parameter shape does not match the sampling space");
  }
  std::vector<double> natural;
  natural.reserve(coords_.size());
  natural.insert(natural.end(), params.lambda.begin(), params.lambda.end());
  natural.insert(natural.end(), params.p_shift.begin(), params.p_shift.end());
  natural.push_back(params.a);
  natural.insert(natural.end(), params.q.begin(), params.q.end());
  natural.insert(natural.end(), params.beta.begin(), params.beta.end());
  if (!is_stationary(params.phi)) throw std::domain_error("to_sampling: phi is not stationary");
  const auto rho = ar_to_pacf(params.phi);
  natural.insert(natural.end(), rho.begin(), rho.end());
  natural.push_back(params.alpha_A);
  natural.push_back(params.alpha_P);
  natural.insert(natural.end(), params.a_init.begin(), params.a_init.end());

  std::vector<double> z(coords_.size());
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const auto& c = coords_[i];
    if (!c.bounded) {
      z[i] = natural[i];
      continue;
    }
    if (!(natural[i] > c.lo && natural[i] < c.hi)) {
      throw std::domain_error("to_sampling: " + c.name + " outside its open support");
    }
    z[i] = to_log_odds(natural[i], c.lo, c.hi);
  }
  return z;
}

ModelParameters SamplingSpace::to_natural(std::span<const double> z, double omega) const {
  if (z.size() != coords_.size()) throw std::invalid_argument("to_natural: wrong vector length");
  auto value = [&](std::size_t i) {
    const auto& c = coords_[i];
    if (!c.bounded) return z[i];
    const double x = from_log_odds(z[i], c.lo, c.hi);
    if (!(x > c.lo && x < c.hi)) {
      throw std::domain_error("to_natural: " + c.name + " mapped onto its support boundary");
    }
    return x;
  };
  auto gather = [&](const std::vector<std::size_t>& idx, std::size_t from = 0) {
    std::vector<double> out;
    for (std::size_t i = from; i < idx.size(); ++i) out.push_back(value(idx[i]));
    return out;
  };
  ModelParameters p;
  p.lambda = gather(groups_.lambda);
  p.p_shift = gather(groups_.p_shift);
  p.a = value(groups_.amplitude.front());
  p.q = gather(groups_.amplitude, 1);
  p.beta = gather(groups_.beta);
  p.phi = pacf_to_ar(gather(groups_.rho));
  p.alpha_A = value(groups_.alpha[0]);
  p.alpha_P = value(groups_.alpha[1]);
  p.a_init = gather(groups_.a_init);
  p.omega = omega;
  p.psi_P = 1.0;
  return p;
}

double SamplingSpace::log_jacobian(std::span<const double> z) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const auto& c = coords_[i];
    if (c.bounded) acc += log_odds_log_jacobian(z[i], c.lo, c.hi);
  }
  return acc;
}

namespace {

bool inside_support(const SamplingSpace& space, std::span<const double> z) {
  const auto& coords = space.coordinates();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(z[i])) return false;
    if (!coords[i].bounded) continue;
    const double x = from_log_odds(z[i], coords[i].lo, coords[i].hi);
    if (!(x > coords[i].lo && x < coords[i].hi)) return false;
  }
  return true;
}

// Omega-free part of the log posterior at z plus the residual sum of squares;
// the omega-dependent terms are added by `assemble`.
struct PointEval {
  double ss = 0.0;
  double rest = kNegInf;  // log prior without omega + log Jacobian
  bool valid() const { return std::isfinite(rest) && std::isfinite(ss); }
};

PointEval evaluate(const SamplingSpace& space, std::span<const double> z, const TimeSeries& y) {
  PointEval ev;
  if (!inside_support(space, z)) return ev;
  const auto params = space.to_natural(z, 1.0);
  const double lp = log_prior_excluding_omega(params, space.prior());
  if (!std::isfinite(lp)) return ev;
  ev.ss = sum_squared_residuals(params, y);
  ev.rest = lp + space.log_jacobian(z);
  return ev;
}

double assemble(const PointEval& ev, double omega, std::size_t n, const GammaPrior& omega_prior) {
  if (!ev.valid() || !(omega > 0.0)) return kNegInf;
  const double ll = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi / omega) -
                    0.5 * omega * ev.ss;
  const double v = ll + omega_prior.logpdf(omega) + ev.rest;
  return std::isfinite(v) ? v : kNegInf;
}

}  // namespace

double log_posterior(const SamplingSpace& space, std::span<const double> z, double omega,
                     const TimeSeries& y) {
  return assemble(evaluate(space, z, y), omega, y.size(), space.prior().omega);
}

// ---------------------------------------------------------------------------

std::vector<Block> default_blocks(const SamplingSpace& space, bool full) {
  if (full) {
    std::vector<std::size_t> all(space.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return {{"all", std::move(all)}};
  }
  const auto& g = space.groups();
  std::vector<Block> blocks{{"lambda", g.lambda}, {"p", g.p_shift}, {"amplitude", g.amplitude},
                            {"beta", g.beta},     {"rho", g.rho},   {"alpha", g.alpha},
                            {"A_init", g.a_init}};
  std::erase_if(blocks, [](const Block& b) { return b.indices.empty(); });
  return blocks;
}

std::vector<Block> default_blocks(const Dimensions& dims, bool full) {
  std::vector<double> peaks;
  for (std::size_t j = 0; j < dims.k; ++j) peaks.push_back(2.0 / static_cast<double>(j + 2));
  return default_blocks(SamplingSpace(dims, default_prior(dims, peaks)), full);
}

// ---------------------------------------------------------------------------

BlockAdapter::BlockAdapter(Eigen::MatrixXd initial_cov, double target_acceptance,
                           std::size_t window, double shrinkage)
    : target_(target_acceptance),
      window_(std::max<std::size_t>(window, 2)),
      shrinkage_(shrinkage),
      log_scale_(std::log(2.38 / std::sqrt(static_cast<double>(initial_cov.rows())))),
      cov_(std::move(initial_cov)) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("BlockAdapter: covariance not positive definite");
  chol_ = llt.matrixL();
}

void BlockAdapter::set_state(double log_scale, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("BlockAdapter: covariance not positive definite");
  log_scale_ = log_scale;
  cov_ = cov;
  chol_ = llt.matrixL();
}

void BlockAdapter::update(double accept_prob, std::span<const double> block_state) {
  ++steps_;
  const double gain = std::pow(static_cast<double>(steps_), -0.6);
  log_scale_ = std::clamp(log_scale_ + gain * (accept_prob - target_), -30.0, 10.0);
  history_.emplace_back(block_state.begin(), block_state.end());
  if (history_.size() > window_) history_.erase(history_.begin());
  if (steps_ % window_ == 0 && history_.size() == window_) refresh_covariance();
}

void BlockAdapter::refresh_covariance() {
  const auto d = cov_.rows();
  const auto w = static_cast<double>(history_.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& h : history_) mean += Eigen::Map<const Eigen::VectorXd>(h.data(), d);
  mean /= w;
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(d, d);
  for (const auto& h : history_) {
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(h.data(), d) - mean;
    emp.noalias() += c * c.transpose();
  }
  emp /= (w - 1.0);
  // Coordinates that never moved keep their previous variance.
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(emp(i, i) > 0.0)) {
      emp.row(i).setZero();
      emp.col(i).setZero();
      emp(i, i) = cov_(i, i);
    }
  }
  Eigen::MatrixXd next = (1.0 - shrinkage_) * emp;
  next.diagonal() += shrinkage_ * emp.diagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(next);
  if (llt.info() != Eigen::Success) return;
  cov_ = std::move(next);
  chol_ = llt.matrixL();
}

MhResult rwmh_step(std::vector<double>& z, double& log_value, std::span<const std::size_t> block,
                   const LogDensity& log_density, double scale, const Eigen::MatrixXd& chol,
                   double dof, std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(block.size());
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) u(i) = normal(rng);
  double mix = 1.0;
  if (std::isfinite(dof)) {
    std::chi_squared_distribution<double> chi2(dof);
    mix = std::sqrt(dof / chi2(rng));
  }
  const Eigen::VectorXd step = (scale * mix) * (chol.triangularView<Eigen::Lower>() * u).eval();

  std::vector<double> proposal(z);
  for (Eigen::Index i = 0; i < d; ++i) proposal[block[static_cast<std::size_t>(i)]] += step(i);
  const double lp = log_density(proposal);
  const double delta = lp - log_value;
  MhResult res;
  if (std::isnan(delta) || lp == kNegInf) {
    res.accept_prob = 0.0;
  } else {
    res.accept_prob = delta >= 0.0 ? 1.0 : std::exp(delta);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (unif(rng) < res.accept_prob) {
    z = std::move(proposal);
    log_value = lp;
    res.accepted = true;
  }
  return res;
}

// ---------------------------------------------------------------------------

GammaPrior omega_conditional(const ModelParameters& params, const TimeSeries& y,
                             const GammaPrior& prior) {
  const double ss = y.size() ? sum_squared_residuals(params, y) : 0.0;
  return {prior.shape + 0.5 * static_cast<double>(y.size()), 1.0 / (1.0 / prior.scale + 0.5 * ss)};
}

double gibbs_omega(const ModelParameters& params, const TimeSeries& y, const PriorSpec& prior,
                   std::mt19937_64& rng) {
  const auto cond = omega_conditional(params, y, prior.omega);
  std::gamma_distribution<double> gamma(cond.shape, cond.scale);
  return gamma(rng);
}

// ---------------------------------------------------------------------------

std::vector<std::string> SamplerConfig::check() const {
  std::vector<std::string> out;
  if (!(n_burnin < n_iterations)) out.emplace_back("n_burnin must be smaller than n_iterations");
  if (thin < 1) out.emplace_back("thin must be at least 1");
  if (n_chains < 1) out.emplace_back("n_chains must be at least 1");
  if (!(proposal_dof > 0.0)) out.emplace_back("proposal_dof must be positive");
  if (target_acceptance >= 1.0) out.emplace_back("target_acceptance must lie in (0, 1)");
  if (adapt_window < 2) out.emplace_back("adapt_window must be at least 2");
  return out;
}

ModelParameters ChainOutput::draw(std::size_t row) const {
  const Eigen::RowVectorXd r = draws.row(static_cast<Eigen::Index>(row));
  return from_flat(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), dims);
}

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

class ChainRunner {
 public:
  ChainRunner(const TimeSeries& y, const SamplingSpace& space, const SamplerConfig& config,
              std::size_t chain_index)
      : y_(y), space_(space), config_(config), blocks_(default_blocks(space, config.full_block)) {
    out_.chain_index = chain_index;
    out_.final_state.dims = space.dims();
    out_.dims = space.dims();
    out_.names = parameter_names(space.dims());
    out_.sampling_names = space.names();
    for (const auto& b : blocks_) out_.block_names.push_back(b.name);
  }

  void start_fresh(const ModelParameters& init, std::uint64_t seed) {
    rng_.seed(seed_for(seed, out_.chain_index));
    try {
      z_ = space_.to_sampling(init);
    } catch (const std::exception& e) {
      throw NumericalError(std::string("initial point outside the prior support: ") + e.what());
    }
    omega_ = init.omega;
    current_ = evaluate(space_, z_, y_);
    log_post_ = assemble(current_, omega_, y_.size(), space_.prior().omega);
    if (!std::isfinite(log_post_)) throw NumericalError("initial point has a non-finite log posterior");
    for (const auto& b : blocks_) {
      const auto d = static_cast<Eigen::Index>(b.indices.size());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto idx = b.indices[static_cast<std::size_t>(i)];
        const double sd = space_.coordinates()[idx].bounded ? 0.1 : 0.1 * std::max(std::abs(z_[idx]), 0.5);
        cov(i, i) = sd * sd;
      }
      adapters_.emplace_back(std::move(cov), target_for(b), config_.adapt_window);
    }
  }

  double target_for(const Block& b) const {
    if (config_.target_acceptance > 0.0) return config_.target_acceptance;
    return b.indices.size() == 1 ? 0.44 : 0.234;
  }

  void start_resumed(const SamplerState& state) {
    std::istringstream is(state.rng_state);
    is >> rng_;
    if (!is) throw std::invalid_argument("resume: corrupt RNG state");
    if (state.z.size() != space_.size() || state.log_scales.size() != blocks_.size() ||
        state.covariances.size() != blocks_.size()) {
      throw std::invalid_argument("resume: state does not match the sampling space");
    }
    z_ = state.z;
    omega_ = state.omega;
    iteration_offset_ = state.iteration;
    current_ = evaluate(space_, z_, y_);
    log_post_ = assemble(current_, omega_, y_.size(), space_.prior().omega);
    if (!std::isfinite(log_post_)) throw NumericalError("resume: state has a non-finite log posterior");
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      adapters_.emplace_back(state.covariances[b], target_for(blocks_[b]), config_.adapt_window);
      adapters_.back().set_state(state.log_scales[b], state.covariances[b]);
    }
  }

  ChainOutput run(std::size_t n_iterations, std::size_t n_burnin) {
    const std::size_t kept = (n_iterations - n_burnin) / config_.thin;
    out_.draws.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(out_.names.size()));
    out_.sampling_draws.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(z_.size()));
    out_.log_posterior.reserve(kept);
    std::vector<std::size_t> accepts(blocks_.size(), 0);
    std::size_t row = 0;

    PointEval pending;
    const LogDensity target = [&](std::span<const double> z) {
      pending = evaluate(space_, z, y_);
      return assemble(pending, omega_, y_.size(), space_.prior().omega);
    };

    for (std::size_t it = 0; it < n_iterations; ++it) {
      const bool burnin = it < n_burnin;
      // Gibbs: omega | rest, using the cached residual sum of squares.
      const double shape = space_.prior().omega.shape + 0.5 * static_cast<double>(y_.size());
      const double scale = 1.0 / (1.0 / space_.prior().omega.scale + 0.5 * current_.ss);
      omega_ = std::gamma_distribution<double>(shape, scale)(rng_);
      log_post_ = assemble(current_, omega_, y_.size(), space_.prior().omega);

      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        auto& ad = adapters_[b];
        const auto res = rwmh_step(z_, log_post_, blocks_[b].indices, target, ad.scale(),
                                   ad.cholesky(), config_.proposal_dof, rng_);
        if (res.accepted) current_ = pending;
        if (burnin) {
          std::vector<double> state;
          for (auto idx : blocks_[b].indices) state.push_back(z_[idx]);
          ad.update(res.accept_prob, state);
        } else if (res.accepted) {
          ++accepts[b];
        }
      }

      if (!burnin && (it - n_burnin + 1) % config_.thin == 0 && row < kept) {
        const auto params = space_.to_natural(z_, omega_);
        const auto flat = to_flat(params);
        for (std::size_t c = 0; c < flat.size(); ++c) {
          out_.draws(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = flat[c];
        }
        for (std::size_t c = 0; c < z_.size(); ++c) {
          out_.sampling_draws(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = z_[c];
        }
        out_.log_posterior.push_back(log_post_);
        ++row;
      }
    }

    const double post = static_cast<double>(n_iterations - n_burnin);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      out_.acceptance_rates.push_back(static_cast<double>(accepts[b]) / post);
    }
    finish_diagnostics();
    auto& st = out_.final_state;
    st.z = z_;
    st.omega = omega_;
    st.rng_state = rng_to_string(rng_);
    st.iteration = iteration_offset_ + n_iterations;
    for (const auto& ad : adapters_) {
      st.log_scales.push_back(ad.log_scale());
      st.covariances.push_back(ad.covariance());
    }
    return std::move(out_);
  }

 private:
  static std::uint64_t seed_for(std::uint64_t seed, std::size_t chain) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chain)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  }

  void finish_diagnostics() {
    const auto cols = out_.draws.cols();
    out_.ess.resize(static_cast<std::size_t>(cols));
    out_.split_rhat.resize(static_cast<std::size_t>(cols));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::VectorXd col = out_.draws.col(c);
      std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
      out_.ess[static_cast<std::size_t>(c)] = effective_sample_size(s);
      out_.split_rhat[static_cast<std::size_t>(c)] =
          col.size() >= 4 ? split_rhat({s}) : std::numeric_limits<double>::quiet_NaN();
    }
  }

  const TimeSeries& y_;
  const SamplingSpace& space_;
  const SamplerConfig& config_;
  std::vector<Block> blocks_;
  std::vector<BlockAdapter> adapters_;
  std::mt19937_64 rng_;
  std::vector<double> z_;
  double omega_ = 1.0;
  double log_post_ = kNegInf;
  PointEval current_;
  std::size_t iteration_offset_ = 0;
  ChainOutput out_;
};

void require_valid(const SamplerConfig& config) {
  if (auto issues = config.check(); !issues.empty()) {
    std::string msg = "invalid sampler configuration:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw std::invalid_argument(msg);
  }
}

}  // namespace

ChainOutput run_chain(const TimeSeries& y, const PriorSpec& prior, const SamplerConfig& config,
                      const ModelParameters& init, std::size_t chain_index) {
  require_valid(config);
  const SamplingSpace space(init.dims(), prior);
  ChainRunner runner(y, space, config, chain_index);
  runner.start_fresh(init, config.rng_seed);
  return runner.run(config.n_iterations, config.n_burnin);
}

ChainOutput resume_chain(const TimeSeries& y, const PriorSpec& prior, const SamplerConfig& config,
                         const SamplerState& state, std::size_t chain_index) {
  if (config.thin < 1 || config.n_iterations < config.thin) {
    throw std::invalid_argument("resume: n_iterations must cover at least one thinning interval");
  }
  const SamplingSpace space(state.dims, prior);
  ChainRunner runner(y, space, config, chain_index);
  runner.start_resumed(state);
  return runner.run(config.n_iterations, 0);
}

ChainOutput MultiChainOutput::pooled() const {
  if (chains.empty()) throw std::invalid_argument("pooled: no chains");
  ChainOutput out = chains.front();
  Eigen::Index rows = 0;
  for (const auto& c : chains) rows += c.draws.rows();
  out.draws.resize(rows, chains.front().draws.cols());
  out.sampling_draws.resize(rows, chains.front().sampling_draws.cols());
  out.log_posterior.clear();
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    out.draws.middleRows(at, c.draws.rows()) = c.draws;
    out.sampling_draws.middleRows(at, c.sampling_draws.rows()) = c.sampling_draws;
    out.log_posterior.insert(out.log_posterior.end(), c.log_posterior.begin(), c.log_posterior.end());
    at += c.draws.rows();
  }
  std::fill(out.acceptance_rates.begin(), out.acceptance_rates.end(), 0.0);
  for (const auto& c : chains) {
    for (std::size_t b = 0; b < out.acceptance_rates.size(); ++b) {
      out.acceptance_rates[b] += c.acceptance_rates[b] / static_cast<double>(chains.size());
    }
  }
  out.ess = ess;
  out.split_rhat = split_rhat;
  return out;
}

MultiChainOutput run_chains(const TimeSeries& y, const PriorSpec& prior,
                            const SamplerConfig& config, const ModelParameters& init) {
  require_valid(config);
  const SamplingSpace space(init.dims(), prior);
  const auto z0 = space.to_sampling(init);

  std::vector<ModelParameters> starts{init};
  for (std::size_t c = 1; c < config.n_chains; ++c) {
    std::mt19937_64 rng(config.rng_seed ^ (0x9E3779B97F4A7C15ULL * (c + 1)));
    std::normal_distribution<double> normal(0.0, 0.1);
    ModelParameters start = init;
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto z = z0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] += normal(rng) * (space.coordinates()[i].bounded ? 1.0 : std::max(std::abs(z0[i]), 0.5));
      }
      if (std::isfinite(log_posterior(space, z, init.omega, y))) {
        start = space.to_natural(z, init.omega);
        break;
      }
    }
    starts.push_back(std::move(start));
  }

  MultiChainOutput out;
  out.chains.resize(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < config.n_chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        out.chains[c] = run_chain(y, prior, config, starts[c], c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto cols = static_cast<std::size_t>(out.chains.front().draws.cols());
  out.ess.assign(cols, 0.0);
  out.split_rhat.assign(cols, std::numeric_limits<double>::quiet_NaN());
  std::vector<Eigen::VectorXd> store(out.chains.size());
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<std::span<const double>> spans;
    for (std::size_t k = 0; k < out.chains.size(); ++k) {
      out.ess[c] += out.chains[k].ess[c];
      store[k] = out.chains[k].draws.col(static_cast<Eigen::Index>(c));
      spans.emplace_back(store[k].data(), static_cast<std::size_t>(store[k].size()));
    }
    if (store.front().size() >= 2) out.split_rhat[c] = split_rhat(spans);
  }
  return out;
}

ModelParameters initial_parameters(const TimeSeries& y, const Dimensions& dims,
                                   const PriorSpec& prior, std::span<const double> peaks) {
  const std::size_t n = y.size();
  if (peaks.size() != dims.k) throw std::invalid_argument("initial_parameters: need one peak per frequency");
  auto params = ModelParameters::zeros(dims);
  const auto freq = descending(peaks);
  for (std::size_t j = 0; j < dims.k; ++j) {
    params.lambda[j] = prior.lambda[j].contains(freq[j]) ? freq[j] : prior.lambda[j].midpoint();
  }

  // Harmonic regression on [trend powers, sin(lambda_j t), cos(lambda_j t)].
  const auto cols = static_cast<Eigen::Index>(dims.r + 1 + 2 * dims.k);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), cols);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
  for (std::size_t t = 1; t <= n; ++t) {
    const auto row = static_cast<Eigen::Index>(t - 1);
    const double x = static_cast<double>(t) / static_cast<double>(n);
    double pw = 1.0;
    for (std::size_t i = 0; i <= dims.r; ++i, pw *= x) X(row, static_cast<Eigen::Index>(i)) = pw;
    for (std::size_t j = 0; j < dims.k; ++j) {
      const auto c = static_cast<Eigen::Index>(dims.r + 1 + 2 * j);
      X(row, c) = std::sin(params.lambda[j] * static_cast<double>(t));
      X(row, c + 1) = std::cos(params.lambda[j] * static_cast<double>(t));
    }
    Y(row) = y.values[t - 1];
  }
  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(Y);
  for (std::size_t i = 0; i <= dims.r; ++i) params.beta[i] = coef(static_cast<Eigen::Index>(i));

  // s sin(lt) + c cos(lt) = R sin(l (t + p)) with l p = atan2(c, s); shifting p
  // by pi/l flips the sign. Pick the admissible shift nearest the support centre,
  // preferring a positive sign for the first frequency.
  std::vector<double> signed_amp(dims.k);
  for (std::size_t j = 0; j < dims.k; ++j) {
    const auto c = static_cast<Eigen::Index>(dims.r + 1 + 2 * j);
    const double s = coef(c), co = coef(c + 1);
    const double R = std::hypot(s, co);
    const double lam = params.lambda[j];
    const double base = std::atan2(co, s) / lam;
    const double half = std::numbers::pi / lam;
    const auto& sup = prior.p_shift[j];
    double best = sup.midpoint();
    int best_sign = 1;
    double best_score = std::numeric_limits<double>::infinity();
    const auto m_lo = static_cast<long>(std::floor((sup.lo - base) / half)) - 1;
    const auto m_hi = static_cast<long>(std::ceil((sup.hi - base) / half)) + 1;
    for (long m = m_lo; m <= m_hi; ++m) {
      const double cand = base + static_cast<double>(m) * half;
      if (!sup.contains(cand)) continue;
      const int sign = (m % 2 == 0) ? 1 : -1;
      double score = std::abs(cand - sup.midpoint());
      if (j == 0 && sign < 0) score += 1e6;
      if (score < best_score) {
        best_score = score;
        best = cand;
        best_sign = sign;
      }
    }
    params.p_shift[j] = best;
    signed_amp[j] = best_sign * R;
  }
  params.a = signed_amp[0] != 0.0 ? signed_amp[0] : 1e-3;
  for (std::size_t j = 1; j < dims.k; ++j) params.q[j - 1] = signed_amp[j] / params.a;

  const double alpha0_A = prior.alpha_A.contains(0.1) ? 0.1 : prior.alpha_A.midpoint();
  const double alpha0_P = prior.alpha_P.contains(0.1) ? 0.1 : prior.alpha_P.midpoint();
  params.alpha_A = alpha0_A;
  params.alpha_P = alpha0_P;
  const double rho0 = prior.rho.contains(0.0) ? 0.0 : prior.rho.midpoint();
  params.phi = pacf_to_ar(std::vector<double>(dims.p, rho0));

  params.omega = 1.0;
  const double ss = sum_squared_residuals(params, y);
  if (n > 0 && ss > 0.0) params.omega = std::clamp(static_cast<double>(n) / ss, 1e-6, 1e6);
  return params;
}

// ---------------------------------------------------------------------------

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);  // initial monotone sequence
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  return static_cast<double>(n) / std::max(tau, 1.0 / static_cast<double>(n));
}

double split_rhat(const std::vector<std::span<const double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("split_rhat: no chains");
  const std::size_t len = chains.front().size() / 2;
  if (len < 2) throw std::invalid_argument("split_rhat: chains too short");
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    if (c.size() / 2 != len) throw std::invalid_argument("split_rhat: chains differ in length");
    halves.push_back(c.subspan(0, len));
    halves.push_back(c.subspan(c.size() - len, len));
  }
  const auto m = static_cast<double>(halves.size());
  const auto L = static_cast<double>(len);
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    const double mu = std::accumulate(h.begin(), h.end(), 0.0) / L;
    double v = 0.0;
    for (double x : h) v += (x - mu) * (x - mu);
    means.push_back(mu);
    vars.push_back(v / (L - 1.0));
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double B = 0.0;
  for (double mu : means) B += (mu - grand) * (mu - grand);
  B *= L / (m - 1.0);
  const double W = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(W > 0.0)) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (L - 1.0) / L * W + B / L;
  return std::sqrt(var_plus / W);
}

}  // namespace stocycle
