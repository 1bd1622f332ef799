#pragma once

#include "epifeed/common.hpp"
#include "epifeed/feature_map.hpp"
#include "epifeed/mdp.hpp"
#include "epifeed/policy.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace epifeed {

/// Called for every episode played against the environment, with the policy
/// that generated it.
using EpisodeSink = std::function<void(const Trajectory&, const HistoryPolicy&)>;

/// Markovian per-step reward r_h(s,a) in [h][s][a] order.
using StepReward = std::vector<double>;

/// Expected total reward sum_h r_h of a Markov policy, by backward induction.
double markov_value(const TabularMdp& mdp, const MarkovPolicy& policy, const StepReward& r);

/// Optimal expected total reward and a greedy optimal policy (value iteration
/// on the given kernel, ties to the smallest action).
struct MarkovOptimum {
  MarkovPolicy policy;
  double value;
};
MarkovOptimum markov_optimum(const TabularMdp& mdp, const StepReward& r);

/// Optimistic value iteration on the empirical kernel with Hoeffding bonuses
/// 2(H-h+1) sqrt(log(2|S||A|H N/delta) / max(1, N(s,a))) (h 1-based). Each
/// episode plays the greedy policy of the current optimistic Q. Returns the
/// uniform mixture over the per-episode greedy policies. Rewards must lie in
/// [-1, 1].
MixturePolicy markov_optimistic_rl(const TabularMdp& env, const StepReward& r, int episodes,
                                   double delta, Rng& rng, const EpisodeSink& sink = {});

struct ExplorationOptions {
  double omega = 0.2;
  int n_eul = 500;
  int n_eval = 200;
  double delta = 0.05;
  int n_max = 64;
};

struct ExplorationResult {
  MixturePolicy mixture;         // Unif(U_1, ..., U_n)
  std::int64_t n_exp = 0;        // n * (N_EUL + N_EVAL)
  int n_loop = 0;
  double lambda_min = 0.0;       // of the final A_n
  Mat a_matrix;                  // A_n
  std::vector<Vec> a_hats;       // mean features per iteration
  std::vector<Vec> directions;   // v_1, ..., v_n
};

/// Builds an exploration mixture for an orthogonal sum-decomposable map:
/// starting from A_0 = (omega^2/16) I, repeatedly trains on r_h = v^T phi_h,
/// evaluates the mixture for N_EVAL episodes, adds the outer product of the
/// mean feature and moves v to the minimum eigenvector, until
/// lambda_min(A_n) >= omega^2/8. Throws TerminationError after n_max rounds.
ExplorationResult find_exploration_mixture(const TabularMdp& env, const FeatureMap& map,
                                           const Vec& v1, const ExplorationOptions& opts,
                                           Rng& rng, const EpisodeSink& sink = {});

/// Theoretical exploration sizes with the unspecified absolute constants set
/// to one: N_EUL, N_EVAL, the bound on N_exp, and the eigenvalue floor of
/// E_Ubar[phi phi^T].
struct ExplorationConstants {
  double n_eul;
  double n_eval;
  double n_exp_bar;
  double covariance_floor;
};
ExplorationConstants exploration_constants(int num_states, int num_actions, int horizon, int d,
                                           std::int64_t N, double delta, double omega);

nlohmann::json mixture_to_json(const MixturePolicy& mixture);

}  // namespace epifeed
