#pragma once

#include "epifeed/gridworld.hpp"
#include "epifeed/mlp.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace epifeed {

struct GridEpisode {
  std::vector<std::array<double, 4>> observations;
  std::vector<int> actions;
  std::vector<GridCell> positions;  // after each move
  GridCell goal;
  int y = 0;
};

GridEpisode rollout(const GoalGridEnv& env, const MlpPolicy& policy, Rng& rng);

/// (1/n) sum over the batch of y * sum_h grad log pi(a_h | s_h).
std::vector<double> reinforce_grad(const MlpPolicy& policy, std::span<const GridEpisode> batch);

struct TrainConfig {
  int iterations = 1500;
  int batch = 30;
  int eval_every = 25;
  int eval_episodes = 40;
  double lr = 1.0;
  std::uint64_t seed = 1;
  bool parallel = true;  // gather the rollout batch with OpenMP
};

struct CurvePoint {
  int iter;
  double mean_reward;
  double std_error;
};

/// Mean label over `episodes` fresh evaluation episodes.
CurvePoint evaluate_policy(const GoalGridEnv& env, const MlpPolicy& policy, int episodes,
                           std::uint64_t seed, int iter);

/// REINFORCE with Adam; evaluation points at iteration 0 and every
/// eval_every iterations.
std::vector<CurvePoint> train(const GoalGridEnv& env, MlpPolicy& policy, const TrainConfig& cfg);

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& os);

}  // namespace epifeed
