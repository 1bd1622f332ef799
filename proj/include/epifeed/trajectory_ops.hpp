#pragma once

#include "epifeed/mdp.hpp"
#include "epifeed/policy.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace epifeed {

inline constexpr double kDefaultEnumerationCap = 1e6;

using TrajectoryScore = std::function<double(std::span<const Step>)>;

/// s_1 ~ rho, a_h ~ pi_h(.|s_h, tau_{h-1}), s_{h+1} ~ P(.|s_h, a_h). Mixture
/// policies draw their component first.
Trajectory sample_trajectory(const TabularMdp& mdp, const HistoryPolicy& policy, Rng& rng);

/// Calls visit(tau, prob) for every trajectory of positive probability.
/// Mixture components are visited separately, so a trajectory may be reported
/// more than once with partial probabilities.
void for_each_trajectory(const TabularMdp& mdp, const HistoryPolicy& policy,
                         const std::function<void(std::span<const Step>, double)>& visit,
                         double cap = kDefaultEnumerationCap);

/// Exact law over Gamma with duplicates merged. Throws SizeError when
/// (|S||A|)^H exceeds `cap`.
std::vector<std::pair<Trajectory, double>> enumerate_trajectory_dist(
    const TabularMdp& mdp, const HistoryPolicy& policy, double cap = kDefaultEnumerationCap);

double exact_value(const TabularMdp& mdp, const HistoryPolicy& policy,
                   const TrajectoryScore& score, double cap = kDefaultEnumerationCap);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};
McEstimate monte_carlo_value(const TabularMdp& mdp, const HistoryPolicy& policy,
                             const TrajectoryScore& score, int samples, Rng& rng);

/// True when full enumeration of Gamma fits below `cap`.
bool enumerable(const TabularMdp& mdp, double cap = kDefaultEnumerationCap);

/// Every (s,a) sequence of length H regardless of dynamics, in code order.
std::vector<Trajectory> all_sequences(int num_states, int num_actions, int horizon,
                                      double cap = kDefaultEnumerationCap);

}  // namespace epifeed
