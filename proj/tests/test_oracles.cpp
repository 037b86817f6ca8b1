#include <cmath>
#include <numeric>

#include "cascade/oracles.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cascade;
using namespace cascade::testing;

namespace {

CtmcSpec reference_spec(int n = 200) {
  CtmcSpec s;
  s.lambda1 = 1.2;
  s.lambda2 = 0.5;
  s.truncation = n;
  return s;
}

}  // namespace

TEST_CASE("Lindley recursion") {
  SUBCASE("service shorter than the gap: nobody waits") {
    auto t = make_stream(DistributionSpec::deterministic(1.0), 1, 0);
    auto s = make_stream(DistributionSpec::deterministic(0.5), 1, 1);
    for (double w : lindley_waiting(t, s, 1000)) CHECK(w == 0.0);
  }
  SUBCASE("service equal to the gap: still nobody waits") {
    auto t = make_stream(DistributionSpec::deterministic(1.0), 1, 0);
    auto s = make_stream(DistributionSpec::deterministic(1.0), 1, 1);
    for (double w : lindley_waiting(t, s, 1000)) CHECK(w == 0.0);
  }
  SUBCASE("M/M/1 mean wait at rho = 0.5") {
    auto t = make_stream(DistributionSpec::exponential(2.0), 8, 0);
    auto s = make_stream(DistributionSpec::exponential(1.0), 8, 1);
    const auto w = lindley_waiting(t, s, 1'000'000);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    CHECK(mm1_mean_wait(0.5, 1.0) == doctest::Approx(1.0));
    CHECK(std::abs(mean / mm1_mean_wait(0.5, 1.0) - 1.0) < 0.02);
  }
  CHECK_THROWS_AS(mm1_mean_wait(1.0, 1.0), ValidationError);
  CHECK(mm1_queue_pmf(0.5, 0) == 0.5);
  CHECK(mm1_queue_pmf(0.5, 3) == 0.0625);
}

TEST_CASE("generator transition examples") {
  const CtmcGenerator g(reference_spec(30));
  // Arriving customer lifts q1 to 2 > c1 = 1 and one customer moves at once.
  CHECK(g.rate({1, 0, 0}, {1, 0, 1}) == 1.2);
  CHECK(g.rate({1, 0, 0}, {2, 0, 0}) == 0.0);
  // Empty state: only arrivals leave it.
  const auto i0 = g.index({0, 0, 0});
  double out = 0.0;
  for (auto e = g.row_begin(i0); e < g.row_end(i0); ++e) out += g.rate(e);
  CHECK(out == doctest::Approx(1.2 + 0.5));
  CHECK(g.rate({0, 0, 0}, {1, 0, 0}) == 1.2);
  CHECK(g.rate({0, 0, 0}, {0, 1, 0}) == 0.5);
  // Class-2 completion lands on an occupied overflow slot: no transfer.
  CHECK(g.rate({3, 1, 1}, {3, 0, 1}) == 1.0);
  CHECK(g.rate({3, 1, 1}, {2, 0, 1}) == 0.0);
  // Class-2 completion frees station 2 with q1 > c1: a transfer follows.
  CHECK(g.rate({3, 1, 0}, {2, 0, 1}) == 1.0);
  // Overflow completion with q1 > c1 hands the slot to the next customer.
  CHECK(g.rate({3, 0, 1}, {2, 0, 1}) == doctest::Approx(1.0 + 1.0));  // mu1 and mu12 share the target
  CHECK(g.rate({1, 0, 1}, {1, 0, 0}) == 1.0);
  // Preempted overflow customer does not complete.
  CHECK(g.rate({1, 2, 1}, {1, 2, 0}) == 0.0);
  CHECK(g.forbidden({2, 0, 0}));
  CHECK_FALSE(g.forbidden({1, 0, 0}));
  CHECK_FALSE(g.forbidden({2, 1, 0}));
}

TEST_CASE("generator rows sum to zero with nonnegative off-diagonals") {
  const CtmcGenerator g(reference_spec(40));
  for (std::size_t i = 0; i < g.states(); ++i) {
    double sum = g.diagonal(i);
    for (auto e = g.row_begin(i); e < g.row_end(i); ++e) {
      CHECK(g.rate(e) >= 0.0);
      CHECK(g.target(e) != i);
      sum += g.rate(e);
    }
    CHECK(std::abs(sum) < 1e-12);
  }
  for (std::size_t i = 0; i < g.states(); ++i) CHECK(g.index(g.state(i)) == i);
}

TEST_CASE("reference instance: normalization, forbidden mass, station-2 marginal") {
  const auto t = stationary_solve(CtmcGenerator(reference_spec()));
  const double total = std::accumulate(t.probability.begin(), t.probability.end(), 0.0);
  CHECK(std::abs(total - 1.0) < 1e-10);
  bool nonnegative = true;
  double forbidden = 0.0;
  const CtmcGenerator g(reference_spec());
  for (std::size_t i = 0; i < t.probability.size(); ++i) {
    nonnegative = nonnegative && t.probability[i] >= 0.0;
    if (g.forbidden(g.state(i))) forbidden += t.probability[i];
  }
  CHECK(nonnegative);
  CHECK(forbidden == 0.0);
  const auto m2 = t.marginal(1);
  double worst = 0.0;
  for (int q = 0; q <= 200; ++q) worst = std::max(worst, std::abs(m2[q] - mm1_queue_pmf(0.5, q)));
  CHECK(worst < 1e-8);
  CHECK(t.truncation_mass < 1e-6);
  CHECK(t.warning.empty());
  // Frozen oracle value; the simulator acceptance compares against it.
  CHECK(oracle_rho_star(t, 0) == doctest::Approx(0.83142163838).epsilon(1e-9));
}

TEST_CASE("decoupled stations give a product of M/M/1 laws") {
  CtmcSpec s;
  s.lambda1 = 0.5;
  s.lambda2 = 0.4;
  s.mu12 = 0.0;
  s.truncation = 60;
  s.threshold = 60;
  const auto t = stationary_solve(CtmcGenerator(s));
  double worst = 0.0;
  for (int q1 = 0; q1 <= 60; ++q1)
    for (int q2 = 0; q2 <= 60; ++q2)
      worst = std::max(worst, std::abs(t.at({q1, q2, 0}) + t.at({q1, q2, 1}) -
                                       mm1_queue_pmf(0.5, q1) * mm1_queue_pmf(0.4, q2)));
  CHECK(worst < 1e-8);
  CHECK(oracle_rho_star(t, 0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("near-empty limit") {
  auto s = reference_spec(30);
  s.lambda1 = s.lambda2 = 1e-6;
  const auto t = stationary_solve(CtmcGenerator(s));
  CHECK(t.at({0, 0, 0}) > 0.999);
  CHECK(oracle_rho_star(t, 0) < 1e-5);
}

TEST_CASE("doubling the truncation leaves rho*_1 unchanged") {
  const double a = oracle_rho_star(stationary_solve(CtmcGenerator(reference_spec(100))), 0);
  const double b = oracle_rho_star(stationary_solve(CtmcGenerator(reference_spec(200))), 0);
  CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("a small truncation raises the truncation warning") {
  auto s = reference_spec(15);
  s.lambda1 = 1.4;
  const auto t = stationary_solve(CtmcGenerator(s));
  CHECK(t.truncation_mass > 1e-6);
  CHECK_FALSE(t.warning.empty());
}

TEST_CASE("CtmcSpec validation") {
  auto s = reference_spec(11);
  CHECK_THROWS_AS(s.validate(), ValidationError);  // N must exceed c1 + 10
  s = reference_spec();
  s.mu12 = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);  // mu12 = 0 only with c1 >= N
  s.threshold = 200;
  CHECK_NOTHROW(s.validate());
  s = reference_spec();
  s.lambda2 = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);

  auto cfg = reference_instance();
  const auto from = CtmcSpec::from_config(cfg, 50);
  CHECK(from.lambda1 == doctest::Approx(1.2));
  CHECK(from.mu12 == 1.0);
  cfg.stations[0].service = DistributionSpec::erlang(2, 1.0);
  CHECK_THROWS_AS(CtmcSpec::from_config(cfg, 50), ValidationError);
  CHECK_THROWS_AS(CtmcSpec::from_config(three_station(1.0, 0.5, 0.3), 50), ValidationError);
}
