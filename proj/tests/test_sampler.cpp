#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stocycle/chain_io.hpp"
#include "stocycle/errors.hpp"
#include "stocycle/pacf.hpp"
#include "stocycle/sampler.hpp"
#include "stocycle/spectral.hpp"

using namespace stocycle;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

ModelParameters truth_k1() {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.a = 2.0;
  m.lambda = {0.5};
  m.p_shift = {1.5};
  m.beta = {0.5};
  m.phi = {0.5};
  m.alpha_A = 0.1;
  m.alpha_P = 0.05;
  m.omega = 4.0;
  return m;
}

struct Problem {
  TimeSeries y;
  PriorSpec prior;
  ModelParameters init;
};

Problem k1_problem(std::uint64_t seed) {
  Problem pb;
  const auto truth = truth_k1();
  pb.y = simulate(truth, 120, seed).series;
  const auto peaks = pick_peaks(periodogram(pb.y, true), 1);
  pb.prior = default_prior(truth.dims(), peaks);
  pb.init = initial_parameters(pb.y, truth.dims(), pb.prior, peaks);
  return pb;
}

SamplerConfig short_config() {
  SamplerConfig c;
  c.n_iterations = 4000;
  c.n_burnin = 2000;
  c.thin = 2;
  c.n_chains = 2;
  c.adapt_window = 200;
  c.rng_seed = 77;
  return c;
}

}  // namespace

TEST_CASE("omega full conditional: conjugate algebra and the empty-series case") {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.lambda = {0.4};
  TimeSeries y{{std::sqrt(2.0), -std::sqrt(2.0)}, 4};  // zero conditional mean: SS = 4
  const auto cond = omega_conditional(m, y, GammaPrior{2.0, 1.0});
  CHECK(cond.shape == doctest::Approx(3.0));
  CHECK(cond.scale == doctest::Approx(1.0 / 3.0));
  CHECK(cond.mean() == doctest::Approx(1.0));
  const auto prior_only = omega_conditional(m, TimeSeries{}, GammaPrior{2.5, 0.7});
  CHECK(prior_only.shape == 2.5);
  CHECK(prior_only.scale == doctest::Approx(0.7));
}

TEST_CASE("Gibbs draws for omega pass a KS test against the analytic Gamma") {
  const auto m = truth_k1();
  const auto y = simulate(m, 60, std::uint64_t{3}).series;
  PriorSpec prior;
  prior.omega = {2.0, 1.0};
  const auto cond = omega_conditional(m, y, prior.omega);
  std::mt19937_64 rng(5);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = gibbs_omega(m, y, prior, rng);
  const double ks = oracle::ks_statistic(draws, [&](double x) { return oracle::gamma_cdf(x, cond.shape, cond.scale); });
  CHECK(ks < oracle::ks_critical_1pct(draws.size()));
}

TEST_CASE("scaled log-odds transform: midpoint, round trip, Jacobian") {
  CHECK(to_log_odds(0.5 * (2.0 + 7.0), 2.0, 7.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(to_log_odds(2.0, 2.0, 7.0), std::domain_error);
  CHECK_THROWS_AS(to_log_odds(7.0, 2.0, 7.0), std::domain_error);
  for (double z : {-8.0, -1.0, 0.3, 5.0}) {
    const double h = 1e-6;
    const double fd = (from_log_odds(z + h, -1, 3) - from_log_odds(z - h, -1, 3)) / (2 * h);
    CHECK(std::log(fd) == doctest::Approx(log_odds_log_jacobian(z, -1, 3)).epsilon(1e-6));
  }
}

TEST_CASE("sampling space round trip on random valid parameters") {
  const Dimensions dims{2, 2, 1};
  const double peaks[] = {0.6, 0.2};
  const auto prior = default_prior(dims, peaks);
  const SamplingSpace space(dims, prior);
  CHECK(space.size() == 2 + 2 + 2 + 2 + 2 + 2 + 2);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 0.99), n(-5, 5);
  for (int rep = 0; rep < 10000; ++rep) {
    auto m = ModelParameters::zeros(dims);
    for (std::size_t j = 0; j < 2; ++j) {
      m.lambda[j] = prior.lambda[j].lo + u(rng) * (prior.lambda[j].hi - prior.lambda[j].lo);
      m.p_shift[j] = prior.p_shift[j].lo + u(rng) * (prior.p_shift[j].hi - prior.p_shift[j].lo);
    }
    m.a = n(rng);
    m.q = {n(rng)};
    m.beta = {n(rng), n(rng)};
    m.phi = pacf_to_ar(std::vector<double>{2 * u(rng) - 1, 2 * u(rng) - 1});
    m.alpha_A = u(rng);
    m.alpha_P = u(rng);
    m.a_init = {n(rng), n(rng)};
    m.omega = 1.7;
    const auto back = space.to_natural(space.to_sampling(m), m.omega);
    const auto a = to_flat(m), b = to_flat(back);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
  }
}

TEST_CASE("log posterior on the sampling scale includes the Jacobian") {
  auto pb = k1_problem(1);
  const SamplingSpace space(pb.init.dims(), pb.prior);
  const auto z = space.to_sampling(pb.init);
  const double lp = log_posterior(space, z, pb.init.omega, pb.y);
  const double want = log_likelihood(pb.init, pb.y) + log_prior(pb.init, pb.prior) + space.log_jacobian(z);
  CHECK(lp == doctest::Approx(want).epsilon(1e-12));
  auto out = z;
  out[0] = std::numeric_limits<double>::infinity();
  CHECK(log_posterior(space, out, 1.0, pb.y) == kNegInf);
}

TEST_CASE("default blocks") {
  const auto blocks = default_blocks(Dimensions{1, 1, 0});
  std::vector<std::size_t> sizes;
  for (const auto& b : blocks) sizes.push_back(b.indices.size());
  CHECK(sizes == std::vector<std::size_t>{1, 1, 1, 1, 1, 2, 1});
  CHECK(default_blocks(Dimensions{1, 1, 0}, true).size() == 1);
  const Dimensions dims{3, 2, 2};
  std::size_t total = 0;
  for (const auto& b : default_blocks(dims)) total += b.indices.size();
  CHECK(total + 1 == parameter_names(dims).size());
}

TEST_CASE("random-walk step: zero scale and out-of-support proposals") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(2, 2);
  const std::size_t block[] = {0, 1};
  std::vector<double> z{0.3, -0.2};
  double lv = -1.0;
  const LogDensity flat = [](std::span<const double>) { return -1.0; };
  for (int i = 0; i < 100; ++i) {
    const auto r = rwmh_step(z, lv, block, flat, 0.0, L, 5.0, rng);
    CHECK(r.accepted);
  }
  CHECK(z == std::vector<double>{0.3, -0.2});
  const LogDensity never = [](std::span<const double>) { return kNegInf; };
  for (int i = 0; i < 100; ++i) CHECK_FALSE(rwmh_step(z, lv, block, never, 1.0, L, 5.0, rng).accepted);
}

namespace {

// Bivariate normal target with mean (1, -2), sds (1, 2), correlation 0.6.
double bivariate_logpdf(std::span<const double> x) {
  const double m0 = 1.0, m1 = -2.0, s0 = 1.0, s1 = 2.0, r = 0.6;
  const double u = (x[0] - m0) / s0, v = (x[1] - m1) / s1;
  return -0.5 * (u * u - 2 * r * u * v + v * v) / (1 - r * r);
}

}  // namespace

TEST_CASE("adaptation direction under all-reject and all-accept histories") {
  BlockAdapter down(Eigen::MatrixXd::Identity(2, 2), 0.234, 50);
  BlockAdapter up(Eigen::MatrixXd::Identity(2, 2), 0.234, 50);
  double prev_down = down.log_scale(), prev_up = up.log_scale();
  const double state[] = {0.0, 0.0};
  for (int i = 0; i < 50; ++i) {
    down.update(0.0, state);
    up.update(1.0, state);
    CHECK(down.log_scale() < prev_down);
    CHECK(up.log_scale() > prev_up);
    prev_down = down.log_scale();
    prev_up = up.log_scale();
  }
}

TEST_CASE("MH with adaptation reproduces a bivariate normal target") {
  std::mt19937_64 rng(21);
  std::vector<double> z{0.0, 0.0};
  double lv = bivariate_logpdf(z);
  const std::size_t block[] = {0, 1};
  const LogDensity target = bivariate_logpdf;
  BlockAdapter ad(Eigen::MatrixXd::Identity(2, 2) * 0.01, 0.234, 500);
  for (int i = 0; i < 20000; ++i) {
    const auto r = rwmh_step(z, lv, block, target, ad.scale(), ad.cholesky(), 5.0, rng);
    ad.update(r.accept_prob, z);
  }
  const int N = 200000;
  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  int acc = 0;
  for (int i = 0; i < N; ++i) {
    acc += rwmh_step(z, lv, block, target, ad.scale(), ad.cholesky(), 5.0, rng).accepted;
    s0 += z[0];
    s1 += z[1];
    s00 += z[0] * z[0];
    s11 += z[1] * z[1];
    s01 += z[0] * z[1];
  }
  const double m0 = s0 / N, m1 = s1 / N;
  CHECK(std::abs(m0 - 1.0) < 0.05);
  CHECK(std::abs(m1 + 2.0) < 0.1);
  CHECK((s00 / N - m0 * m0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK((s11 / N - m1 * m1) == doctest::Approx(4.0).epsilon(0.05));
  CHECK((s01 / N - m0 * m1) == doctest::Approx(1.2).epsilon(0.07));
  const double rate = static_cast<double>(acc) / N;
  CHECK(rate > 0.15);
  CHECK(rate < 0.40);
}

TEST_CASE("MH kernel preserves a univariate target: KS on thinned draws") {
  std::mt19937_64 rng(4);
  std::vector<double> z{0.0};
  const LogDensity target = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
  double lv = 0.0;
  const std::size_t block[] = {0};
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(1, 1);
  std::vector<double> kept;
  for (int i = 0; i < 2000000; ++i) {
    rwmh_step(z, lv, block, target, 2.4, L, 5.0, rng);
    if (i % 20 == 19) kept.push_back(z[0]);
  }
  CHECK(oracle::ks_statistic(kept, oracle::normal_cdf) < oracle::ks_critical_1pct(kept.size()));
}

TEST_CASE("effective sample size and split R-hat on known processes") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  std::vector<double> iid(20000), ar(20000);
  double x = 0;
  for (std::size_t i = 0; i < iid.size(); ++i) {
    iid[i] = normal(rng);
    x = 0.9 * x + normal(rng);
    ar[i] = x;
  }
  CHECK(effective_sample_size(iid) == doctest::Approx(20000).epsilon(0.15));
  CHECK(effective_sample_size(ar) == doctest::Approx(20000.0 * 0.1 / 1.9).epsilon(0.25));

  std::vector<double> a(iid.begin(), iid.begin() + 10000), b(iid.begin() + 10000, iid.end());
  CHECK(split_rhat({a, b}) < 1.01);
  for (auto& v : b) v += 1.0;
  CHECK(split_rhat({a, b}) > 1.1);
  std::vector<double> trend(1000);
  for (std::size_t i = 0; i < trend.size(); ++i) trend[i] = static_cast<double>(i);
  CHECK(split_rhat({trend}) > 1.5);
}

TEST_CASE("chain bookkeeping: one stored draw when a single post burn-in iteration is run") {
  auto pb = k1_problem(2);
  SamplerConfig c = short_config();
  c.n_iterations = 501;
  c.n_burnin = 500;
  c.thin = 1;
  const auto out = run_chain(pb.y, pb.prior, c, pb.init);
  CHECK(out.size() == 1);
  CHECK(out.sampling_draws.rows() == 1);
  CHECK(out.log_posterior.size() == 1);
}

TEST_CASE("init outside the support fails fast") {
  auto pb = k1_problem(2);
  auto bad = pb.init;
  bad.lambda = {3.0};
  CHECK_THROWS_AS(run_chain(pb.y, pb.prior, short_config(), bad), NumericalError);
  SamplerConfig c = short_config();
  c.n_burnin = c.n_iterations;
  CHECK_THROWS_AS(run_chain(pb.y, pb.prior, c, pb.init), std::invalid_argument);
}

TEST_CASE("chains: validity, identification, reproducibility and convergence") {
  auto pb = k1_problem(8);
  const auto cfg = short_config();
  const auto a = run_chains(pb.y, pb.prior, cfg, pb.init);
  const auto b = run_chains(pb.y, pb.prior, cfg, pb.init);
  REQUIRE(a.chains.size() == 2);
  CHECK(a.chains[0].size() == (cfg.n_iterations - cfg.n_burnin) / cfg.thin);
  std::ostringstream sa, sb;
  write_chain_csv(sa, a.chains);
  write_chain_csv(sb, b.chains);
  CHECK(sa.str() == sb.str());

  const auto bounds = pb.prior.phase_bounds();
  for (const auto& c : a.chains) {
    for (std::size_t r = 0; r < c.size(); ++r) {
      const auto d = c.draw(r);
      REQUIRE(validate(d, d.dims(), bounds, true).ok());
      REQUIRE(pb.prior.lambda[0].contains(d.lambda[0]));
    }
    for (double rate : c.acceptance_rates) {
      CHECK(rate > 0.05);
      CHECK(rate < 0.9);
    }
  }
  // Split R-hat across the two chains for lambda1 and a.
  const auto names = a.chains[0].names;
  for (const char* nm : {"lambda1", "a", "omega"}) {
    const auto col = static_cast<std::size_t>(std::find(names.begin(), names.end(), nm) - names.begin());
    CHECK(a.split_rhat[col] < 1.05);
  }

  auto other = cfg;
  other.rng_seed = 78;
  const auto c = run_chains(pb.y, pb.prior, other, pb.init);
  std::ostringstream sc;
  write_chain_csv(sc, c.chains);
  CHECK(sc.str() != sa.str());
  const auto pooled = a.pooled();
  CHECK(pooled.size() == a.chains[0].size() * 2);
}

TEST_CASE("resuming continues with frozen proposals and the saved RNG") {
  auto pb = k1_problem(9);
  auto cfg = short_config();
  cfg.n_chains = 1;
  const auto first = run_chain(pb.y, pb.prior, cfg, pb.init);
  std::stringstream buf;
  const SamplerState states[] = {first.final_state};
  write_states(buf, states);
  const auto loaded = read_states(buf);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].z == first.final_state.z);
  CHECK(loaded[0].rng_state == first.final_state.rng_state);
  CHECK(loaded[0].dims == first.final_state.dims);

  auto more = cfg;
  more.n_iterations = 1000;
  const auto r1 = resume_chain(pb.y, pb.prior, more, loaded[0]);
  const auto r2 = resume_chain(pb.y, pb.prior, more, first.final_state);
  CHECK(r1.size() == 1000 / cfg.thin);
  CHECK(r1.draws == r2.draws);
  CHECK(r1.final_state.iteration == first.final_state.iteration + 1000);
}
