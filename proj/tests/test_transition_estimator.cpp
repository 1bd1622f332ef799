#include "epifeed/instances.hpp"
#include "epifeed/policy.hpp"
#include "epifeed/trajectory_ops.hpp"
#include "epifeed/transitions.hpp"
#include "test_util.hpp"

#include "doctest.h"

#include <cmath>

using namespace epifeed;

namespace {

void check_consistency(const TransitionCounts& c) {
  for (int s = 0; s < c.num_states(); ++s)
    for (int a = 0; a < c.num_actions(); ++a) {
      std::int64_t sum = 0;
      for (int next = 0; next < c.num_states(); ++next) sum += c.visits(s, a, next);
      CHECK(sum == c.visits(s, a));
    }
}

}  // namespace

TEST_CASE("ingest examples") {
  TransitionCounts c(2, 2);
  c.ingest(Trajectory{{1, 0}});
  CHECK(c.visits(1, 0) == 0);
  c.ingest(Trajectory{{0, 0}, {1, 1}});
  CHECK(c.visits(0, 0) == 1);
  CHECK(c.visits(0, 0, 1) == 1);
  CHECK(c.visits(1, 1) == 0);
  check_consistency(c);
}

TEST_CASE("p_hat examples") {
  TransitionCounts c(4, 1);
  const auto u = c.p_hat(2, 0);
  for (double p : u) CHECK(p == 0.25);
  c.ingest(Trajectory{{0, 0}, {1, 0}});
  c.ingest(Trajectory{{0, 0}, {1, 0}});
  c.ingest(Trajectory{{0, 0}, {2, 0}});
  const auto p = c.p_hat(0, 0);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(2.0 / 3));
  CHECK(p[2] == doctest::Approx(1.0 / 3));
  CHECK(p[3] == 0.0);
  CHECK(c.visited(0, 0));
  CHECK_FALSE(c.visited(3, 0));
}

TEST_CASE("property: counts stay consistent and rows normalized") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 1 + static_cast<int>(uniform01(rng) * 4);
    const int A = 1 + static_cast<int>(uniform01(rng) * 3);
    const int H = 1 + static_cast<int>(uniform01(rng) * 4);
    const auto m = epifeed::testing::random_mdp(rng, S, A, H);
    TransitionCounts c(S, A);
    for (int k = 0; k < 50; ++k) {
      c.ingest(sample_trajectory(m, UniformPolicy(A), rng));
      check_consistency(c);
    }
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (double p : c.p_hat(s, a)) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    const TabularMdp emp = c.empirical_mdp(m);
    CHECK(emp.num_states() == S);
  }
}

TEST_CASE("p_hat converges to the true kernel") {
  const auto inst = chain2();
  const TabularMdp& m = *inst.mdp;
  TransitionCounts c(2, 2);
  Rng rng(3);
  for (int k = 0; k < 10000; ++k) c.ingest(sample_trajectory(m, UniformPolicy(2), rng));
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const auto ph = c.p_hat(s, a);
      const double n = static_cast<double>(c.visits(s, a));
      REQUIRE(n > 100);
      for (int next = 0; next < 2; ++next) {
        const double p = m.p(s, a, next);
        CHECK(std::abs(ph[next] - p) <= 3 * std::sqrt(p * (1 - p) / n));
      }
    }
}

TEST_CASE("p_hat total-variation study") {
  const auto inst = grid3();
  const TabularMdp& m = *inst.mdp;
  int cells = 0, within = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    TransitionCounts c(3, 2);
    for (int k = 0; k < 30; ++k) c.ingest(sample_trajectory(m, UniformPolicy(2), rng));
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) {
        if (!c.visited(s, a)) continue;
        const auto ph = c.p_hat(s, a);
        double tv = 0.0;
        for (int next = 0; next < 3; ++next) tv += 0.5 * std::abs(ph[next] - m.p(s, a, next));
        ++cells;
        within += tv <= 3.0 * std::sqrt(3.0 / c.visits(s, a)) ? 1 : 0;
      }
  }
  CHECK(within >= 0.95 * cells);
}

TEST_CASE("xi examples") {
  const XiParams p{100, 0.05, 2, 2, 2, 1.0};
  CHECK(xi_bonus(0, p) == 2.0);
  // mpmath: the unclipped value at n = 25 is 4.0993..., so it clips.
  CHECK(xi_bonus(25, p) == 2.0);
  XiParams scaled = p;
  scaled.bonus_scale = 0.25;
  CHECK(std::abs(xi_bonus(25, scaled) - 1.0248359708676196) <= 1e-12);
  CHECK(std::abs(xi_bonus(400, p) - 1.0368900208728455) <= 1e-12);
  CHECK_THROWS_AS(xi_bonus(3, XiParams{100, 0.0, 2, 2, 2, 1.0}), DomainError);
  CHECK_THROWS_AS(xi_bonus(3, XiParams{100, 1.5, 2, 2, 2, 1.0}), DomainError);
}

TEST_CASE("property: xi range and monotonicity") {
  for (double scale : {1.0, 0.1, 0.01}) {
    const XiParams p{1000, 0.01, 3, 2, 3, scale};
    double prev = 2.0;
    for (std::int64_t n = 0; n <= 100000; n = n < 10 ? n + 1 : n * 3 / 2) {
      const double x = xi_bonus(n, p);
      CHECK(x >= 0.0);
      CHECK(x <= 2.0);
      if (n >= 3) CHECK(x <= prev);
      prev = x;
    }
  }
}

TEST_CASE("counts round-trip through JSON") {
  TransitionCounts c(3, 2);
  c.ingest(Trajectory{{0, 1}, {2, 0}, {1, 1}});
  const auto back = TransitionCounts::from_json(c.to_json());
  CHECK(back.visits(0, 1, 2) == 1);
  CHECK(back.visits(2, 0, 1) == 1);
  CHECK(back.to_json() == c.to_json());
}
