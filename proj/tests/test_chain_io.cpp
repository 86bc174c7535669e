#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stocycle/chain_io.hpp"
#include "stocycle/errors.hpp"
#include "stocycle/prior.hpp"
#include "stocycle/spectral.hpp"

using namespace stocycle;

namespace {

struct Fixture {
  TimeSeries y;
  PriorSpec prior;
  ModelParameters init;
  MultiChainOutput out;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture fx;
    auto m = ModelParameters::zeros({1, 2, 1});
    m.a = 2.0;
    m.lambda = {0.6};
    m.p_shift = {1.0};
    m.beta = {0.3, 0.2};
    m.phi = {0.4, 0.1};
    m.alpha_A = 0.1;
    m.alpha_P = 0.05;
    m.omega = 4.0;
    fx.y = simulate(m, 80, std::uint64_t{21}).series;
    const auto peaks = pick_peaks(periodogram(fx.y, true), 1);
    fx.prior = default_prior(m.dims(), peaks);
    fx.init = initial_parameters(fx.y, m.dims(), fx.prior, peaks);
    SamplerConfig c;
    c.n_iterations = 600;
    c.n_burnin = 300;
    c.thin = 3;
    c.n_chains = 2;
    c.adapt_window = 100;
    c.rng_seed = 5;
    fx.out = run_chains(fx.y, fx.prior, c, fx.init);
    return fx;
  }();
  return f;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("stocycle_" + name);
}

}  // namespace

TEST_CASE("dimensions are recovered from canonical names") {
  for (const Dimensions d : {Dimensions{1, 1, 0}, Dimensions{2, 3, 2}, Dimensions{3, 1, 1}}) {
    const auto names = parameter_names(d);
    const auto got = dimensions_from_names(names);
    CHECK(got.k == d.k);
    CHECK(got.p == d.p);
    CHECK(got.r == d.r);
  }
  std::vector<std::string> bad = parameter_names({1, 1, 0});
  std::swap(bad[0], bad[1]);
  CHECK_THROWS_AS(dimensions_from_names(bad), DataError);
  const std::vector<std::string> junk{"x", "y"};
  CHECK_THROWS_AS(dimensions_from_names(junk), DataError);
}

TEST_CASE("chain CSV round trip is exact") {
  const auto& fx = fixture();
  const auto path = temp_file("chain.csv");
  write_chain_csv(path, fx.out.chains);
  const auto back = read_chain_csv(path);
  REQUIRE(back.size() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& a = fx.out.chains[c];
    const auto& b = back[c];
    CHECK(b.chain_index == c);
    CHECK(b.names == a.names);
    CHECK(b.dims.k == a.dims.k);
    CHECK(b.dims.p == a.dims.p);
    CHECK(b.dims.r == a.dims.r);
    REQUIRE(b.draws.rows() == a.draws.rows());
    CHECK(b.draws == a.draws);
    CHECK(b.log_posterior == a.log_posterior);
  }
  std::ifstream in(path, std::ios::binary);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("chain,draw,", 0) == 0);
  CHECK(header.back() == '\r');
  std::filesystem::remove(path);
}

TEST_CASE("chain CSV rejects malformed input") {
  const auto path = temp_file("bad_chain.csv");
  {
    std::ofstream os(path, std::ios::binary);
    os << "chain,draw,a,log_posterior\r\n0,0,1.0,2.0\r\n";
  }
  CHECK_THROWS_AS(read_chain_csv(path), DataError);
  const auto& fx = fixture();
  std::ostringstream ss;
  write_chain_csv(ss, fx.out.chains);
  auto text = ss.str();
  text.replace(text.find("\r\n") + 2, 1, "x");
  {
    std::ofstream os(path, std::ios::binary);
    os << text;
  }
  CHECK_THROWS_AS(read_chain_csv(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS(read_chain_csv(temp_file("does_not_exist.csv")));
}

TEST_CASE("sampler states survive a binary round trip and resume identically") {
  const auto& fx = fixture();
  std::vector<SamplerState> states;
  for (const auto& ch : fx.out.chains) states.push_back(ch.final_state);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  write_states(buf, states);
  const auto back = read_states(buf);
  REQUIRE(back.size() == states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    CHECK(back[i].z == states[i].z);
    CHECK(back[i].omega == states[i].omega);
    CHECK(back[i].log_scales == states[i].log_scales);
    CHECK(back[i].rng_state == states[i].rng_state);
    CHECK(back[i].iteration == states[i].iteration);
    REQUIRE(back[i].covariances.size() == states[i].covariances.size());
    for (std::size_t b = 0; b < states[i].covariances.size(); ++b) {
      CHECK(back[i].covariances[b] == states[i].covariances[b]);
    }
  }

  SamplerConfig c;
  c.n_iterations = 50;
  c.thin = 1;
  const auto r1 = resume_chain(fx.y, fx.prior, c, states[0]);
  const auto r2 = resume_chain(fx.y, fx.prior, c, back[0]);
  CHECK(r1.draws == r2.draws);

  std::stringstream junk("not a state file");
  CHECK_THROWS_AS(read_states(junk), DataError);
}
