#include "epifeed/reinforce.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace epifeed {

namespace {

constexpr std::uint64_t kTrainStream = 0x7261696e;
constexpr std::uint64_t kEvalStream = 0x6576616c;

}  // namespace

GridEpisode rollout(const GoalGridEnv& env, const MlpPolicy& policy, Rng& rng) {
  GridEpisode ep;
  GridCell pos = env.random_cell(rng);
  ep.goal = env.random_cell(rng);
  const int H = env.horizon();
  ep.observations.reserve(H);
  ep.actions.reserve(H);
  ep.positions.reserve(H);
  for (int h = 0; h < H; ++h) {
    const auto obs = env.observe(pos, ep.goal);
    const std::vector<double> p = policy.probs(obs);
    for (double x : p)
      if (!std::isfinite(x)) throw DomainError("rollout: policy produced a non-finite probability");
    const int a = sample_index(p, rng);
    pos = env.move(pos, a);
    ep.observations.push_back(obs);
    ep.actions.push_back(a);
    ep.positions.push_back(pos);
  }
  ep.y = env.episode_reward(ep.positions, ep.goal);
  return ep;
}

std::vector<double> reinforce_grad(const MlpPolicy& policy, std::span<const GridEpisode> batch) {
  std::vector<double> grad(policy.num_params(), 0.0);
  if (batch.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ep : batch) {
    if (ep.y == 0) continue;
    for (std::size_t h = 0; h < ep.actions.size(); ++h)
      policy.add_log_prob_grad(ep.observations[h], ep.actions[h], scale * ep.y, grad);
  }
  return grad;
}

CurvePoint evaluate_policy(const GoalGridEnv& env, const MlpPolicy& policy, int episodes,
                           std::uint64_t seed, int iter) {
  int hits = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(e)));
    hits += rollout(env, policy, rng).y;
  }
  const double p = static_cast<double>(hits) / episodes;
  return {iter, p, std::sqrt(p * (1.0 - p) / episodes)};
}

std::vector<CurvePoint> train(const GoalGridEnv& env, MlpPolicy& policy, const TrainConfig& cfg) {
  if (cfg.batch < 1 || cfg.iterations < 0 || cfg.eval_every < 1 || cfg.eval_episodes < 1)
    throw ConfigError("train: batch, eval_every and eval_episodes must be positive");
  AdamState adam;
  adam.lr = cfg.lr;
  std::vector<CurvePoint> curve;
  const std::uint64_t train_seed = mix_seed(cfg.seed, kTrainStream);
  const std::uint64_t eval_seed = mix_seed(cfg.seed, kEvalStream);
  auto eval_at = [&](int iter) {
    curve.push_back(evaluate_policy(env, policy, cfg.eval_episodes,
                                    mix_seed(eval_seed, static_cast<std::uint64_t>(iter)), iter));
  };
  eval_at(0);
  std::vector<GridEpisode> batch(cfg.batch);
  for (int it = 1; it <= cfg.iterations; ++it) {
    const std::uint64_t iter_seed = mix_seed(train_seed, static_cast<std::uint64_t>(it));
#pragma omp parallel for schedule(static) if (cfg.parallel)
    for (int e = 0; e < cfg.batch; ++e) {
      Rng rng(mix_seed(iter_seed, static_cast<std::uint64_t>(e)));
      batch[e] = rollout(env, policy, rng);
    }
    const std::vector<double> grad = reinforce_grad(policy, batch);
    adam_step(adam, policy.params(), grad);
    for (double p : policy.params())
      if (!std::isfinite(p)) throw DomainError("train: non-finite parameter after update");
    if (it % cfg.eval_every == 0) eval_at(it);
  }
  return curve;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& os) {
  os << "iter,mean_reward,stderr\n";
  char buf[96];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", c.iter, c.mean_reward, c.std_error);
    os << buf;
  }
}

}  // namespace epifeed
