#pragma once

// Posterior sampler: a Gibbs draw for the precision omega followed by
// Student-t random-walk Metropolis-Hastings updates for blocks of the
// remaining parameters on an unconstrained sampling scale.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stocycle/model.hpp"
#include "stocycle/prior.hpp"

namespace stocycle {

// ---------------------------------------------------------------------------
// Sampling scale

// Scaled log-odds and its inverse. `to_log_odds` throws std::domain_error
// unless lo < x < hi.
double to_log_odds(double x, double lo, double hi);
double from_log_odds(double z, double lo, double hi);
// log |d from_log_odds / dz|
double log_odds_log_jacobian(double z, double lo, double hi);

struct Coordinate {
  std::string name;
  bool bounded = false;
  double lo = 0.0;
  double hi = 0.0;
};

// Maps parameters other than omega onto the sampling vector, ordered as
// lambda_1..k, p_1..k, a, q_2..k, beta_0..r, rho_1..p, alpha_A, alpha_P,
// A_0..A_{1-p}. Interval-supported coordinates (lambda, p, rho, alpha) go
// through the scaled log-odds transform; the rest pass through. The AR
// coefficients are represented by their partial autocorrelations.
class SamplingSpace {
 public:
  SamplingSpace(const Dimensions& dims, PriorSpec prior);

  const Dimensions& dims() const { return dims_; }
  const PriorSpec& prior() const { return prior_; }
  std::size_t size() const { return coords_.size(); }
  const std::vector<Coordinate>& coordinates() const { return coords_; }
  std::vector<std::string> names() const;

  // Throws std::domain_error when a bounded coordinate sits on or outside its support.
  std::vector<double> to_sampling(const ModelParameters& params) const;
  ModelParameters to_natural(std::span<const double> z, double omega) const;
  double log_jacobian(std::span<const double> z) const;

  // Index ranges of the parameter groups inside the sampling vector.
  struct Groups {
    std::vector<std::size_t> lambda, p_shift, amplitude, beta, rho, alpha, a_init;
  };
  const Groups& groups() const { return groups_; }

 private:
  Dimensions dims_;
  PriorSpec prior_;
  std::vector<Coordinate> coords_;
  Groups groups_;
};

// Log posterior (up to a constant) on the sampling scale:
// log-likelihood + log-prior + log-Jacobian. -inf outside the support.
double log_posterior(const SamplingSpace& space, std::span<const double> z, double omega,
                     const TimeSeries& y);

// ---------------------------------------------------------------------------
// Blocks and proposals

struct Block {
  std::string name;
  std::vector<std::size_t> indices;
};

// {lambda}, {p_shift}, {a, q}, {beta}, {rho}, {alpha_A, alpha_P}, {A_init};
// empty groups are dropped. `full` gives one block over everything.
std::vector<Block> default_blocks(const SamplingSpace& space, bool full = false);
std::vector<Block> default_blocks(const Dimensions& dims, bool full = false);

// Robbins-Monro scale adaptation plus windowed empirical covariance for one block.
class BlockAdapter {
 public:
  BlockAdapter(Eigen::MatrixXd initial_cov, double target_acceptance, std::size_t window,
               double shrinkage = 0.05);

  // Records one burn-in step: the acceptance probability of the proposal and
  // the block's state after the step.
  void update(double accept_prob, std::span<const double> block_state);

  double scale() const { return std::exp(log_scale_); }
  double log_scale() const { return log_scale_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  double target() const { return target_; }
  std::size_t steps() const { return steps_; }

  void set_state(double log_scale, const Eigen::MatrixXd& cov);

 private:
  void refresh_covariance();

  double target_;
  std::size_t window_;
  double shrinkage_;
  double log_scale_;
  std::size_t steps_ = 0;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  std::vector<std::vector<double>> history_;
};

struct MhResult {
  bool accepted = false;
  double accept_prob = 0.0;
};

using LogDensity = std::function<double(std::span<const double>)>;

// One Metropolis step on the coordinates in `block`: z' = z + scale * L * t_dof
// restricted to the block. `log_density` is evaluated at the full proposed
// vector; -inf proposals are always rejected. Updates z and log_value on acceptance.
MhResult rwmh_step(std::vector<double>& z, double& log_value, std::span<const std::size_t> block,
                   const LogDensity& log_density, double scale, const Eigen::MatrixXd& chol,
                   double dof, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Gibbs step for omega

// Full conditional of omega given the other parameters: Gamma with shape
// a_w + n/2 and scale 1 / (1/b_w + sum(eps^2)/2).
GammaPrior omega_conditional(const ModelParameters& params, const TimeSeries& y,
                             const GammaPrior& prior);
double gibbs_omega(const ModelParameters& params, const TimeSeries& y, const PriorSpec& prior,
                   std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Chains

struct SamplerConfig {
  std::size_t n_iterations = 300000;
  std::size_t n_burnin = 200000;
  std::size_t thin = 10;
  std::size_t n_chains = 4;
  double proposal_dof = 5.0;
  // <= 0 selects 0.44 for scalar blocks and 0.234 otherwise.
  double target_acceptance = 0.0;
  std::size_t adapt_window = 500;
  std::uint64_t rng_seed = 20240601;
  bool full_block = false;

  std::vector<std::string> check() const;
};

// Snapshot sufficient to continue a chain with frozen proposals.
struct SamplerState {
  Dimensions dims;
  std::vector<double> z;
  double omega = 1.0;
  std::vector<double> log_scales;
  std::vector<Eigen::MatrixXd> covariances;
  std::string rng_state;
  std::size_t iteration = 0;
};

struct ChainOutput {
  Dimensions dims;
  std::vector<std::string> names;           // natural scale, canonical order
  std::vector<std::string> sampling_names;  // sampling scale
  Eigen::MatrixXd draws;                    // kept draws x names (natural scale, incl. omega)
  Eigen::MatrixXd sampling_draws;           // kept draws x sampling_names
  std::vector<std::string> block_names;
  std::vector<double> acceptance_rates;     // per block, post burn-in
  std::vector<double> log_posterior;        // per kept draw
  std::vector<double> ess;                  // per natural parameter
  std::vector<double> split_rhat;           // per natural parameter
  std::size_t chain_index = 0;
  SamplerState final_state;

  ModelParameters draw(std::size_t row) const;
  std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
};

// Runs one chain. Throws NumericalError if `init` has a non-finite log posterior.
ChainOutput run_chain(const TimeSeries& y, const PriorSpec& prior, const SamplerConfig& config,
                      const ModelParameters& init, std::size_t chain_index = 0);

// Continues from `state` for config.n_iterations further iterations with the
// adaptation frozen; every iteration counts as post burn-in.
ChainOutput resume_chain(const TimeSeries& y, const PriorSpec& prior, const SamplerConfig& config,
                         const SamplerState& state, std::size_t chain_index = 0);

struct MultiChainOutput {
  std::vector<ChainOutput> chains;
  std::vector<double> ess;         // summed across chains
  std::vector<double> split_rhat;  // across all chains
  ChainOutput pooled() const;
};

// config.n_chains chains on separate threads. Chain 0 starts at `init`;
// the others start from `init` jittered on the sampling scale.
MultiChainOutput run_chains(const TimeSeries& y, const PriorSpec& prior,
                            const SamplerConfig& config, const ModelParameters& init);

// Starting point: lambda at the peaks (descending); amplitudes, phases and trend
// from a least-squares harmonic regression; rho = 0, alpha_A = alpha_P = 0.1,
// A initial conditions 0 and omega from the residual variance.
ModelParameters initial_parameters(const TimeSeries& y, const Dimensions& dims,
                                   const PriorSpec& prior, std::span<const double> peaks);

// ---------------------------------------------------------------------------
// Diagnostics

// Effective sample size with Geyer's initial positive sequence.
double effective_sample_size(std::span<const double> x);
// Split-chain potential scale reduction over one or more chains of equal length.
double split_rhat(const std::vector<std::span<const double>>& chains);

}  // namespace stocycle
