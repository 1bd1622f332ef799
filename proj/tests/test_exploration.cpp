#include "epifeed/exploration.hpp"
#include "epifeed/instances.hpp"
#include "epifeed/sym_eig.hpp"
#include "epifeed/trajectory_ops.hpp"
#include "test_util.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>

using namespace epifeed;

namespace {

double mixture_value(const TabularMdp& m, const MixturePolicy& mix, const StepReward& r) {
  double v = 0.0;
  for (std::size_t i = 0; i < mix.members().size(); ++i)
    v += mix.weights()[i] * markov_value(m, *mix.members()[i], r);
  return v;
}

// States 0..3 on a line, action 0 moves left and 1 moves right; reward +1 in state 3.
TabularMdp line_mdp(int H) {
  const int S = 4;
  std::vector<double> p(S * 2 * S, 0.0);
  for (int s = 0; s < S; ++s) {
    p[(s * 2 + 0) * S + std::max(0, s - 1)] = 1.0;
    p[(s * 2 + 1) * S + std::min(S - 1, s + 1)] = 1.0;
  }
  return TabularMdp(S, 2, H, p, {1.0, 0.0, 0.0, 0.0});
}

StepReward line_reward(int H) {
  StepReward r(H * 4 * 2, 0.0);
  for (int h = 0; h < H; ++h) r[(h * 4 + 3) * 2 + 0] = r[(h * 4 + 3) * 2 + 1] = 1.0;
  return r;
}

}  // namespace

TEST_CASE("symmetric_eig examples") {
  const auto id = symmetric_eig(Mat::Identity(4, 4));
  for (int i = 0; i < 4; ++i) CHECK(id.values(i) == doctest::Approx(1.0));
  Mat m(2, 2);
  m << 3, 0, 0, 1;
  const auto e = symmetric_eig(m);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(3.0));
  CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(symmetric_eig(Mat::Zero(2, 3)), StructuralError);
  Mat asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(symmetric_eig(asym), DomainError);
}

TEST_CASE("property: symmetric_eig reconstruction and orthonormality") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(uniform01(rng) * 8);
    Mat a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = 2 * uniform01(rng) - 1;
    const Mat m = 0.5 * (a + a.transpose());
    const auto e = symmetric_eig(m);
    CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - m).norm() <= 1e-9);
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(d, d)).norm() <= 1e-10);
    for (int i = 1; i < d; ++i) CHECK(e.values(i) >= e.values(i - 1));
    for (int i = 0; i < d; ++i) {
      Eigen::Index k;
      e.vectors.col(i).cwiseAbs().maxCoeff(&k);
      CHECK(e.vectors(k, i) > 0.0);
    }
  }
}

TEST_CASE("markov_optimum matches exact planning on Markov rewards") {
  const int H = 5;
  const auto m = line_mdp(H);
  const auto opt = markov_optimum(m, line_reward(H));
  CHECK(opt.value == doctest::Approx(2.0));
  CHECK(markov_value(m, opt.policy, line_reward(H)) == doctest::Approx(2.0));
}

TEST_CASE("optimistic RL on a one-state bandit") {
  const int H = 3;
  const TabularMdp m(1, 2, H, {1.0, 1.0}, {1.0});
  StepReward r(H * 2);
  for (int h = 0; h < H; ++h) {
    r[h * 2 + 0] = -1.0;
    r[h * 2 + 1] = 1.0;
  }
  Rng rng(1);
  int episode = 0;
  bool later_greedy = true;
  const auto mix = markov_optimistic_rl(m, r, 200, 0.05, rng,
                                        [&](const Trajectory& tau, const HistoryPolicy&) {
                                          if (++episode >= 2)
                                            for (const Step& st : tau) later_greedy &= st.action == 1;
                                        });
  CHECK(later_greedy);
  CHECK(mixture_value(m, mix, r) >= H - 2.0 * H / 200 - 1e-12);

  const StepReward zero(H * 2, 0.0);
  Rng rng2(2);
  CHECK(mixture_value(m, markov_optimistic_rl(m, zero, 20, 0.05, rng2), zero) == 0.0);

  const StepReward bad(H * 2, 3.0);
  CHECK_THROWS_AS(markov_optimistic_rl(m, bad, 5, 0.05, rng2), DomainError);
}

TEST_CASE("optimistic RL reaches the rewarding room") {
  const int H = 6;
  const auto m = line_mdp(H);
  const auto r = line_reward(H);
  const double opt = markov_optimum(m, r).value;
  int good = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    good += mixture_value(m, markov_optimistic_rl(m, r, 2000, 0.05, rng), r) >= opt - 0.1 * H;
  }
  CHECK(good >= 48);
}

TEST_CASE("property: optimistic RL regret is sublinear on random Markov-reward MDPs") {
  Rng gen(77);
  const int S = 3, A = 2, H = 3, episodes = 2000, seeds = 50;
  const auto m = epifeed::testing::random_mdp(gen, S, A, H);
  StepReward r(H * S * A);
  for (auto& x : r) x = 2 * uniform01(gen) - 1;
  const double opt = markov_optimum(m, r).value;
  std::vector<double> ratios;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(seed);
    std::vector<double> regret;
    markov_optimistic_rl(m, r, episodes, 0.05, rng, [&](const Trajectory&, const HistoryPolicy& pi) {
      regret.push_back(opt - markov_value(m, dynamic_cast<const MarkovPolicy&>(pi), r));
    });
    REQUIRE(regret.size() == static_cast<std::size_t>(episodes));
    double first = 0.0, last = 0.0;
    for (int i = 0; i < episodes / 4; ++i) {
      first += regret[i];
      last += regret[episodes - 1 - i];
    }
    ratios.push_back(first > 0 ? last / first : 0.0);
  }
  std::sort(ratios.begin(), ratios.end());
  CHECK(ratios[seeds / 2] <= 0.5);
}

TEST_CASE("exploration mixture on grid3") {
  const auto inst = grid3();
  const int d = inst.map->dim();
  ExplorationOptions opts;
  opts.n_eul = 100;
  opts.n_eval = 50;
  Rng rng(5);
  Vec v1 = Vec::Zero(d);
  v1(0) = 1.0;
  std::int64_t episodes = 0;
  const auto res = find_exploration_mixture(*inst.mdp, *inst.map, v1, opts, rng,
                                            [&](const Trajectory&, const HistoryPolicy&) { ++episodes; });
  CHECK(res.n_loop >= 1);
  CHECK(res.n_exp == res.n_loop * (opts.n_eul + opts.n_eval));
  CHECK(episodes == res.n_exp);
  CHECK(res.lambda_min >= opts.omega * opts.omega / 8);
  CHECK(res.directions.size() == static_cast<std::size_t>(res.n_loop));
  CHECK(res.directions[0] == v1);

  Mat a = (opts.omega * opts.omega / 16) * Mat::Identity(d, d);
  for (const Vec& h : res.a_hats) a += h * h.transpose();
  CHECK((a - res.a_matrix).norm() <= 1e-12);
  CHECK(symmetric_eig(res.a_matrix).values(0) >= -1e-10);

  // The mixture's exact feature covariance is positive definite.
  Mat cov = Mat::Zero(d, d);
  for (const auto& [tau, p] : enumerate_trajectory_dist(*inst.mdp, res.mixture)) {
    const Vec phi = inst.map->feature_of(tau);
    cov += p * phi * phi.transpose();
  }
  CHECK(symmetric_eig(cov).values(0) > 0.0);
  CHECK(res.mixture.num_components() == static_cast<std::size_t>(res.n_loop) * opts.n_eul);
  const auto j = mixture_to_json(res.mixture);
  CHECK(j.at("members").size() == res.mixture.num_components());
}

TEST_CASE("exploration initialization arithmetic") {
  const double omega = 0.4;
  CHECK(omega * omega / 8 == doctest::Approx(0.02));
  CHECK(omega * omega / 16 == doctest::Approx(0.01));
}

TEST_CASE("exploration preconditions and termination") {
  const auto inst = grid3();
  Rng rng(1);
  Vec v1 = Vec::Zero(inst.map->dim());
  v1(0) = 1.0;
  ExplorationOptions too_big;
  too_big.omega = 0.9;
  too_big.n_eul = 5;
  too_big.n_eval = 5;
  too_big.n_max = 3;
  try {
    find_exploration_mixture(*inst.mdp, *inst.map, v1, too_big, rng);
    FAIL("expected TerminationError");
  } catch (const TerminationError& e) {
    CHECK(e.lambda_min() < too_big.omega * too_big.omega / 8);
  }
  CHECK_THROWS_AS(find_exploration_mixture(*inst.mdp, *inst.map, 2.0 * v1, {}, rng), DomainError);
  const auto direct = chain2();
  Vec u = Vec::Zero(direct.map->dim());
  u(0) = 1.0;
  CHECK_THROWS_AS(find_exploration_mixture(*direct.mdp, *direct.map, u, {}, rng), StructuralError);
}

TEST_CASE("theoretical exploration constants") {
  const auto c = exploration_constants(3, 2, 2, 4, 3000, 0.05 / 36000, 0.2);
  CHECK(c.n_eul > 1e4);
  CHECK(c.n_eval > c.n_eul);
  CHECK(c.n_exp_bar > c.n_eval);
  CHECK(c.covariance_floor > 0.0);
  const double log_term = std::log(3.0 * 2 * 3000.0 * 3000 * 4 / ((0.05 / 36000) * 0.04));
  CHECK(c.n_eul == doctest::Approx(9.0 * 2 * 4 * log_term / 0.04).epsilon(1e-12));
}
