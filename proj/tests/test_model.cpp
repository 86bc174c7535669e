#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "stocycle/model.hpp"

using namespace stocycle;

namespace {

ModelParameters k1_params() {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.a = 1.5;
  m.lambda = {0.4};
  m.p_shift = {2.0};
  m.beta = {0.3};
  m.phi = {0.5};
  m.alpha_A = 0.2;
  m.alpha_P = 0.1;
  m.omega = 4.0;
  m.a_init = {0.1};
  return m;
}

ModelParameters k2_params() {
  auto m = ModelParameters::zeros({2, 2, 1});
  m.a = 2.0;
  m.q = {-0.7};
  m.lambda = {0.9, 0.3};
  m.p_shift = {1.0, 4.0};
  m.beta = {1.0, -0.5};
  m.phi = {0.5, 0.2};
  m.alpha_A = 0.3;
  m.alpha_P = 0.15;
  m.omega = 2.0;
  m.a_init = {0.2, -0.1};
  return m;
}

}  // namespace

TEST_CASE("validate accepts a plain single-frequency parameter set") {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.lambda = {0.4};
  m.phi = {0.5};
  m.omega = 1.0;
  CHECK(validate(m, {1, 1, 0}).ok());
}

TEST_CASE("validate reports each violated constraint") {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.lambda = {0.4};
  m.phi = {1.2};
  auto rep = validate(m, {1, 1, 0});
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.message().find("non-stationary") != std::string::npos);

  auto m2 = ModelParameters::zeros({2, 1, 0});
  m2.lambda = {0.3, 0.3};
  m2.phi = {0.1};
  rep = validate(m2, {2, 1, 0});
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.message().find("non-distinct") != std::string::npos);

  m2.lambda = {0.3, 0.5};
  m2.omega = 0.0;
  rep = validate(m2, {2, 1, 0}, true);
  CHECK(rep.violations.size() == 2);  // order and omega

  m.phi = {0.5};
  const std::vector<std::pair<double, double>> support{{1.0, 2.0}};
  CHECK_FALSE(validate(m, {1, 1, 0}, support).ok());
  m.p_shift = {1.5};
  CHECK(validate(m, {1, 1, 0}, support).ok());
  CHECK_FALSE(validate(m, {2, 1, 0}).ok());  // shape mismatch
}

TEST_CASE("trend polynomial in t/n") {
  const double c[] = {3.859};
  CHECK(trend(7, 48, c) == doctest::Approx(3.859));
  const double lin[] = {0.0, 1.0};
  CHECK(trend(48, 48, lin) == doctest::Approx(1.0));
  const double quad[] = {1.0, 2.0, 3.0};
  CHECK(trend(10, 20, quad) == doctest::Approx(2.75));
}

TEST_CASE("conditional mean examples") {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.lambda = {0.4};
  m.beta = {2.5};
  CHECK(conditional_mean(m, 17, 0.0, 0.0, 50) == doctest::Approx(2.5));

  m.a = 1.0;
  m.beta = {0.0};
  m.lambda = {std::numbers::pi / 2};
  CHECK(conditional_mean(m, 1, 0.0, 0.0, 10) == doctest::Approx(1.0));

  auto m2 = ModelParameters::zeros({2, 1, 0});
  m2.a = 1.3;
  m2.q = {-1.0};
  m2.lambda = {0.7, 0.35};
  m2.p_shift = {0.0, 5.0};  // 0.35 * (t + 5) = 0.7 * (t + 0) when t = 5
  CHECK(conditional_mean(m2, 5, 0.0, 0.0, 10) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cycle_sine matches sin for moderate arguments and stays accurate for large ones") {
  for (double x : {0.0, 1.0, -3.7, 120.5, 4999.25}) {
    CHECK(cycle_sine(0.37, x) == doctest::Approx(std::sin(0.37 * x)).epsilon(1e-12));
  }
  CHECK(std::abs(cycle_sine(0.5, 4.0 * std::numbers::pi * 1e4)) < 1e-9);
}

TEST_CASE("filter in the deterministic limit returns the sinusoid residuals") {
  auto m = k2_params();
  m.alpha_A = m.alpha_P = 0.0;
  m.a_init = {0.0, 0.0};
  TimeSeries y{{1.0, -2.0, 0.5, 3.0, 0.0}, 4};
  const auto path = filter(m, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i + 1);
    const double det = m.a * (std::sin(0.9 * (t + 1.0)) - 0.7 * std::sin(0.3 * (t + 4.0))) +
                       1.0 - 0.5 * t / 5.0;
    CHECK(path.A[i] == 0.0);
    CHECK(path.P[i] == 0.0);
    CHECK(path.eps[i] == doctest::Approx(y.values[i] - det).epsilon(1e-12));
  }
}

TEST_CASE("filter matches a three-step recursion worked by hand") {
  auto m = ModelParameters::zeros({1, 2, 0});
  m.a = 1.0;
  m.lambda = {0.5};
  m.p_shift = {0.0};
  m.beta = {0.0};
  m.phi = {0.5, 0.2};
  m.alpha_A = 0.4;
  m.alpha_P = 0.3;
  m.a_init = {0.1, -0.2};
  TimeSeries y{{1.0, 0.0, -1.0}, 4};

  // t = 1: A_0 = 0.1, A_-1 = -0.2, P_0 = 0
  const double m1 = (1.0 + 0.1) * std::sin(0.5 * 1.0);
  const double e1 = 1.0 - m1;
  const double A1 = 0.5 * 0.1 + 0.2 * (-0.2) + 0.4 * e1;
  const double P1 = 0.3 * e1;
  // t = 2
  const double m2 = (1.0 + A1) * std::sin(0.5 * (2.0 + P1));
  const double e2 = 0.0 - m2;
  const double A2 = 0.5 * A1 + 0.2 * 0.1 + 0.4 * e2;
  const double P2 = P1 + 0.3 * e2;
  // t = 3
  const double m3 = (1.0 + A2) * std::sin(0.5 * (3.0 + P2));
  const double e3 = -1.0 - m3;
  const double A3 = 0.5 * A2 + 0.2 * A1 + 0.4 * e3;
  const double P3 = P2 + 0.3 * e3;

  const auto path = filter(m, y);
  CHECK(path.m[0] == doctest::Approx(m1).epsilon(1e-13));
  CHECK(path.m[1] == doctest::Approx(m2).epsilon(1e-13));
  CHECK(path.m[2] == doctest::Approx(m3).epsilon(1e-13));
  CHECK(path.eps[2] == doctest::Approx(e3).epsilon(1e-13));
  CHECK(path.A[2] == doctest::Approx(A3).epsilon(1e-13));
  CHECK(path.P[2] == doctest::Approx(P3).epsilon(1e-13));
}

TEST_CASE("filter rejects invalid parameters") {
  auto m = k1_params();
  m.phi = {1.5};
  CHECK_THROWS_AS(filter(m, TimeSeries{{1.0, 2.0}, 4}), std::invalid_argument);
}

TEST_CASE("log-likelihood examples") {
  auto m = ModelParameters::zeros({1, 1, 0});
  m.lambda = {0.4};
  m.phi = {0.0};
  m.omega = 2.0 * std::numbers::pi;
  TimeSeries y{{0.0}, 4};
  CHECK(log_likelihood(m, y) == doctest::Approx(0.0).epsilon(1e-14));
  m.omega = 1.0;
  y.values = {1.0};
  CHECK(log_likelihood(m, y) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) - 0.5));
  m.phi = {2.0};
  CHECK(log_likelihood(m, y) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("log-likelihood is the sum of one-step Gaussian log densities") {
  const auto m = k2_params();
  const auto sim = simulate(m, 80, std::uint64_t{5});
  const auto path = filter(m, sim.series);
  double acc = 0.0;
  for (std::size_t i = 0; i < 80; ++i) {
    const double d = sim.series.values[i] - path.m[i];
    acc += -0.5 * std::log(2.0 * std::numbers::pi / m.omega) - 0.5 * m.omega * d * d;
  }
  CHECK(log_likelihood(m, sim.series) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("log-likelihood prefers the truth to a perturbed amplitude on average") {
  const auto m = k1_params();
  auto worse = m;
  worse.a *= 1.5;
  double diff = 0.0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const auto sim = simulate(m, 120, rep + 11);
    diff += log_likelihood(m, sim.series) - log_likelihood(worse, sim.series);
  }
  CHECK(diff > 0.0);
}

TEST_CASE("simulate in the deterministic limit gives the multi-frequency sinusoid") {
  auto m = k2_params();
  m.alpha_A = m.alpha_P = 0.0;
  m.a_init = {0.0, 0.0};
  const std::vector<double> zeros(30, 0.0);
  const auto sim = simulate(m, zeros);
  for (std::size_t i = 0; i < 30; ++i) {
    const double t = static_cast<double>(i + 1);
    const double want = 2.0 * (std::sin(0.9 * (t + 1.0)) - 0.7 * std::sin(0.3 * (t + 4.0))) +
                        1.0 - 0.5 * t / 30.0;
    CHECK(sim.series.values[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("simulate is deterministic in the seed and filter inverts it exactly") {
  for (const auto& m : {k1_params(), k2_params()}) {
    const auto a = simulate(m, 500, std::uint64_t{42});
    const auto b = simulate(m, 500, std::uint64_t{42});
    CHECK(a.series.values == b.series.values);
    const auto path = filter(m, a.series);
    CHECK(path.eps == a.path.eps);
    CHECK(path.A == a.path.A);
    CHECK(path.P == a.path.P);
    CHECK(path.m == a.path.m);
  }
}

TEST_CASE("round trip through supplied innovations stays within 1e-10 relative") {
  const auto m = k2_params();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / m.omega));
  std::vector<double> eps(2000);
  for (auto& e : eps) e = normal(rng);
  const auto sim = simulate(m, eps);
  const auto path = filter(m, sim.series);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(std::abs(path.eps[i] - eps[i]) <= 1e-10 * std::max(1.0, std::abs(eps[i])));
  }
}

TEST_CASE("simulate agrees with an independent transcription of the recursion") {
  auto m = k2_params();
  m.beta = {0.0, 0.0};
  std::mt19937_64 r1(9), r2(9);
  const auto ours = simulate(m, 300, r1);
  const auto ref = oracle::simulate_cycle(m, 300, r2);
  for (std::size_t i = 0; i < 300; ++i) {
    CHECK(ours.series.values[i] == doctest::Approx(ref[i]).epsilon(1e-9));
  }
}

TEST_CASE("long random-walk-phase simulation has mean zero") {
  auto m = k1_params();
  m.beta = {0.0};
  const auto sim = simulate(m, 100000, std::uint64_t{123});
  std::vector<double> x = sim.series.values;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  // Batch-means standard error of the sample mean.
  const std::size_t batches = 100, len = x.size() / batches;
  double ss = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double bm = 0.0;
    for (std::size_t t = b * len; t < (b + 1) * len; ++t) bm += x[t];
    bm /= static_cast<double>(len);
    ss += (bm - mean) * (bm - mean);
  }
  const double se = std::sqrt(ss / (batches - 1) / batches);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("deterministic mean does not depend on the sample length except through the trend") {
  auto m = k2_params();
  m.alpha_A = m.alpha_P = 0.0;
  m.a_init = {0.0, 0.0};
  m.beta = {0.7, 0.0};
  CHECK(conditional_mean(m, 10, 0.0, 0.0, 20) == conditional_mean(m, 10, 0.0, 0.0, 2000));
}

TEST_CASE("flat record round trip with canonical names") {
  const auto m = k2_params();
  const auto names = parameter_names(m.dims());
  const std::vector<std::string> want{"a",  "q2",    "lambda1", "lambda2", "p1",     "p2",
                                      "beta0", "beta1", "phi1", "phi2", "alphaA", "alphaP",
                                      "omega", "A0",  "A-1"};
  CHECK(names == want);
  const auto back = from_flat(to_flat(m), m.dims());
  CHECK(to_flat(back) == to_flat(m));
  const auto rec = to_record(m);
  CHECK(rec.count("psiP") == 0);
  CHECK(to_flat(from_record(rec, m.dims())) == to_flat(m));
  auto broken = rec;
  broken.erase("alphaP");
  CHECK_THROWS_WITH_AS(from_record(broken, m.dims()), doctest::Contains("alphaP"), std::invalid_argument);
  CHECK(parameter_names({1, 1, 0}).size() == 9);
}
