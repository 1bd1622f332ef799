#include "epifeed/feature_map.hpp"
#include "epifeed/logistic.hpp"
#include "epifeed/mdp.hpp"
#include "epifeed/policy.hpp"
#include "epifeed/trajectory_ops.hpp"
#include "test_util.hpp"

#include "doctest.h"

#include <cmath>
#include <map>
#include <memory>

using namespace epifeed;
using epifeed::testing::random_mdp;
using epifeed::testing::uniform_mdp;

namespace {

// Two states, two actions, one-hot kernel: action a moves to state a.
TabularMdp deterministic_mdp(int H) {
  std::vector<double> p = {1, 0, 0, 1, 1, 0, 0, 1};
  return TabularMdp(2, 2, H, p, {1.0, 0.0});
}

}  // namespace

TEST_CASE("TabularMdp rejects malformed kernels") {
  CHECK_THROWS_AS(TabularMdp(2, 1, 1, {0.5, 0.6, 0.5, 0.5}, {0.5, 0.5}), StructuralError);
  CHECK_THROWS_AS(TabularMdp(2, 1, 1, {1.5, -0.5, 0.5, 0.5}, {0.5, 0.5}), StructuralError);
  CHECK_THROWS_AS(TabularMdp(2, 1, 1, {0.5, 0.5, 0.5, 0.5}, {0.4, 0.5}), StructuralError);
  CHECK_THROWS_AS(TabularMdp(2, 1, 1, {0.5, 0.5}, {0.5, 0.5}), StructuralError);
  CHECK_THROWS_AS(TabularMdp(0, 1, 1, {}, {}), StructuralError);
}

TEST_CASE("trajectory validation") {
  const auto m = uniform_mdp(2, 2, 2);
  CHECK_NOTHROW(m.validate(Trajectory{{0, 1}, {1, 0}}));
  CHECK_THROWS_AS(m.validate(Trajectory{{0, 1}}), StructuralError);
  CHECK_THROWS_AS(m.validate(Trajectory{{0, 2}, {1, 0}}), StructuralError);
  CHECK_THROWS_AS(m.validate(Trajectory{{2, 0}, {1, 0}}), StructuralError);
}

TEST_CASE("direct feature map index formula") {
  // tau = ((s=1,a=2),(s=2,a=1)) in 1-based terms.
  const Trajectory tau{{0, 1}, {1, 0}};
  const auto raw = FeatureMap::direct(2, 2, 2, false);
  Vec expect = Vec::Zero(8);
  expect(1) = 1.0;
  expect(6) = 1.0;
  CHECK((raw.feature_of(tau) - expect).norm() == 0.0);

  const auto unit = FeatureMap::direct(2, 2, 2, true);
  const Vec phi = unit.feature_of(tau);
  CHECK(phi(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(phi(6) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(phi.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(unit.feature_of(Trajectory{{0, 2}, {1, 0}}), StructuralError);
}

TEST_CASE("default direct normalization gives unit norm on every trajectory") {
  for (int H = 1; H <= 3; ++H) {
    const auto map = FeatureMap::direct(3, 2, H);
    for (const auto& tau : all_sequences(3, 2, H))
      CHECK(std::abs(map.feature_of(tau).norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("sum-decomposable features") {
  const int S = 2, A = 2, H = 3, d = 6;
  SUBCASE("all-zero tables give the zero vector") {
    std::vector<Vec> tables(H * S * A, Vec::Zero(d));
    const auto map = FeatureMap::sum_decomposable(S, A, H, tables, true);
    CHECK(map.feature_of(Trajectory{{0, 0}, {1, 1}, {0, 1}}).norm() == 0.0);
  }
  SUBCASE("phi(tau) equals the sum of step features exactly") {
    Rng rng(3);
    std::vector<Vec> tables;
    for (int h = 0; h < H; ++h)
      for (int i = 0; i < S * A; ++i) {
        Vec v = Vec::Zero(d);
        v.segment(2 * h, 2) = epifeed::testing::random_vec(rng, 2, -0.3, 0.3);
        tables.push_back(v);
      }
    const auto map = FeatureMap::sum_decomposable(S, A, H, tables, true);
    CHECK(map.orthogonal());
    for (const auto& tau : all_sequences(S, A, H)) {
      Vec sum = Vec::Zero(d);
      for (int h = 0; h < H; ++h) sum += map.step_feature(h, tau[h].state, tau[h].action);
      CHECK((map.feature_of(tau) - sum).norm() == 0.0);
      CHECK(map.feature_of(tau).norm() <= 1.0 + 1e-9);
    }
  }
  SUBCASE("orthogonality claim is verified") {
    std::vector<Vec> tables(H * S * A, Vec::Unit(d, 0) * 0.1);
    CHECK_THROWS_AS(FeatureMap::sum_decomposable(S, A, H, tables, true), StructuralError);
    CHECK_NOTHROW(FeatureMap::sum_decomposable(S, A, H, tables, false));
  }
  SUBCASE("norm bound is enforced") {
    std::vector<Vec> tables(H * S * A, Vec::Unit(d, 0) * 0.5);
    CHECK_THROWS_AS(FeatureMap::sum_decomposable(S, A, H, tables, false), StructuralError);
  }
}

TEST_CASE("sampling degenerate MDPs") {
  const auto m = deterministic_mdp(3);
  const auto pol = MarkovPolicy::deterministic(3, 2, 2, std::vector<int>{1, 1, 0, 0, 1, 0});
  const Trajectory expect{{0, 1}, {1, 0}, {0, 1}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    CHECK(sample_trajectory(m, pol, rng) == expect);
  }
  const TabularMdp single(1, 3, 4, {1.0, 1.0, 1.0}, {1.0});
  Rng rng(5);
  for (int k = 0; k < 20; ++k)
    for (const Step& st : sample_trajectory(single, UniformPolicy(3), rng)) CHECK(st.state == 0);
}

TEST_CASE("sampling is seed-deterministic") {
  Rng g(11);
  const auto m = random_mdp(g, 3, 2, 4);
  Rng a(99), b(99);
  for (int k = 0; k < 50; ++k)
    CHECK(sample_trajectory(m, UniformPolicy(2), a) == sample_trajectory(m, UniformPolicy(2), b));
}

TEST_CASE("enumeration examples") {
  SUBCASE("deterministic MDP and policy give one trajectory") {
    const auto m = deterministic_mdp(2);
    const auto pol = MarkovPolicy::deterministic(2, 2, 2, std::vector<int>{1, 1, 0, 0});
    const auto dist = enumerate_trajectory_dist(m, pol);
    REQUIRE(dist.size() == 1);
    CHECK(dist[0].second == 1.0);
  }
  SUBCASE("initial distribution read-off") {
    const TabularMdp m(2, 1, 1, {0.5, 0.5, 0.5, 0.5}, {0.3, 0.7});
    const auto dist = enumerate_trajectory_dist(m, UniformPolicy(1));
    REQUIRE(dist.size() == 2);
    CHECK(dist[0].second == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(dist[1].second == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("uniform everything, 16 trajectories of mass 1/16") {
    const auto dist = enumerate_trajectory_dist(uniform_mdp(2, 2, 2), UniformPolicy(2));
    REQUIRE(dist.size() == 16);
    for (const auto& [tau, p] : dist) CHECK(p == doctest::Approx(1.0 / 16).epsilon(1e-15));
  }
  SUBCASE("cap exceeded") {
    CHECK_THROWS_AS(enumerate_trajectory_dist(uniform_mdp(4, 4, 6), UniformPolicy(4), 1e6),
                    SizeError);
  }
}

TEST_CASE("property: enumerated distributions are normalized") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = 1 + static_cast<int>(uniform01(rng) * 3);
    const int A = 1 + static_cast<int>(uniform01(rng) * 3);
    const int H = 1 + static_cast<int>(uniform01(rng) * 3);
    const auto m = random_mdp(rng, S, A, H);
    std::vector<double> probs(static_cast<std::size_t>(H) * S * A);
    for (std::size_t i = 0; i < probs.size(); i += A) {
      double sum = 0.0;
      for (int a = 0; a < A; ++a) sum += probs[i + a] = uniform01(rng) + 1e-3;
      for (int a = 0; a < A; ++a) probs[i + a] /= sum;
    }
    const MarkovPolicy pol(H, S, A, probs);
    double total = 0.0;
    for (const auto& [tau, p] : enumerate_trajectory_dist(m, pol)) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-10);
  }
}

TEST_CASE("policy distributions are valid") {
  Rng rng(8);
  const auto m = random_mdp(rng, 2, 3, 2);
  auto p1 = std::make_shared<const MarkovPolicy>(
      MarkovPolicy::deterministic(2, 2, 3, std::vector<int>{0, 1, 2, 0}));
  auto p2 = std::make_shared<const MarkovPolicy>(
      MarkovPolicy(2, 2, 3, std::vector<double>(12, 1.0 / 3)));
  const MixturePolicy mix({p1, p2});
  std::vector<double> out(3);
  const Trajectory prefix{{1, 2}};
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 2; ++s) {
      mix.distribution(h, s, std::span(prefix).first(h), out);
      double sum = 0.0;
      for (double x : out) {
        CHECK(x >= 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  CHECK(mix.num_components() == 2);
  CHECK(mix.component_weight(0) == doctest::Approx(0.5));
  CHECK_THROWS(MarkovPolicy(1, 1, 2, {0.7, 0.7}));
}

TEST_CASE("mixture is drawn once per episode") {
  // Member 0 always plays action 0, member 1 always action 1: episodes never mix actions.
  const auto m = uniform_mdp(2, 2, 3);
  auto p0 = std::make_shared<const MarkovPolicy>(
      MarkovPolicy::deterministic(3, 2, 2, std::vector<int>(6, 0)));
  auto p1 = std::make_shared<const MarkovPolicy>(
      MarkovPolicy::deterministic(3, 2, 2, std::vector<int>(6, 1)));
  const MixturePolicy mix({p0, p1});
  Rng rng(4);
  int ones = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto tau = sample_trajectory(m, mix, rng);
    for (const Step& st : tau) CHECK(st.action == tau[0].action);
    ones += tau[0].action;
  }
  CHECK(std::abs(ones - 1000) <= 3 * std::sqrt(500.0));
  // Exact enumeration sees the same episode-level mixture.
  double mixed = 0.0;
  for (const auto& [tau, p] : enumerate_trajectory_dist(m, mix))
    if (tau[0].action != tau[1].action || tau[1].action != tau[2].action) mixed += p;
  CHECK(mixed == 0.0);
}

TEST_CASE("sampled visit frequencies match exact occupancy") {
  const TabularMdp m(2, 2, 3, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, {0.5, 0.5});
  const UniformPolicy pol(2);
  std::vector<double> exact(3 * 2, 0.0);
  for (const auto& [tau, p] : enumerate_trajectory_dist(m, pol))
    for (int h = 0; h < 3; ++h) exact[h * 2 + tau[h].state] += p;
  const int n = 100000;
  std::vector<double> freq(6, 0.0);
  Rng rng(77);
  for (int k = 0; k < n; ++k) {
    const auto tau = sample_trajectory(m, pol, rng);
    for (int h = 0; h < 3; ++h) freq[h * 2 + tau[h].state] += 1.0 / n;
  }
  for (int i = 0; i < 6; ++i) {
    const double sigma = std::sqrt(exact[i] * (1 - exact[i]) / n);
    CHECK(std::abs(freq[i] - exact[i]) <= 3 * sigma);
  }
}

TEST_CASE("trajectory frequencies pass a chi-square sanity check") {
  Rng g(5150);
  const auto m = random_mdp(g, 2, 2, 2);
  const UniformPolicy pol(2);
  const auto dist = enumerate_trajectory_dist(m, pol);
  std::map<std::uint64_t, int> counts;
  const int n = 100000;
  Rng rng(1);
  for (int k = 0; k < n; ++k) ++counts[prefix_code(sample_trajectory(m, pol, rng), 2, 2)];
  double chi2 = 0.0;
  for (const auto& [tau, p] : dist) {
    const double e = p * n;
    const double o = counts[prefix_code(tau, 2, 2)];
    chi2 += (o - e) * (o - e) / e;
  }
  // 15 degrees of freedom; 37.7 is the 0.999 quantile.
  CHECK(chi2 < 37.7);
}

TEST_CASE("exact_value examples") {
  Rng g(12);
  const auto m = random_mdp(g, 2, 2, 2);
  const UniformPolicy pol(2);
  CHECK(exact_value(m, pol, [](std::span<const Step>) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact_value(m, pol, [](std::span<const Step>) { return 0.0; }) == 0.0);

  auto map = std::make_shared<const FeatureMap>(FeatureMap::direct(2, 2, 2));
  Vec w(8);
  w << 1.0, -1.0, 0.5, 2.0, -0.5, 1.5, -2.0, 0.25;
  const LogisticRewardModel model(w, w.norm(), map);
  const double v =
      exact_value(m, pol, [&](std::span<const Step> tau) { return model.mean(tau); });
  Rng rng(31);
  const int n = 100000;
  double mean = 0.0;
  for (int k = 0; k < n; ++k) mean += model.sample_label(sample_trajectory(m, pol, rng), rng);
  mean /= n;
  CHECK(std::abs(mean - v) <= 3 * std::sqrt(v * (1 - v) / n));
}

TEST_CASE("table policy and prefix codes") {
  CHECK(prefix_code({}, 2, 2) == 0);
  const Trajectory a{{0, 1}}, b{{1, 0}};
  CHECK(prefix_code(a, 2, 2) != prefix_code(b, 2, 2));
  CHECK_THROWS(TablePolicy(1, 2, 2, {{0}}));
}
