#pragma once

#include "epifeed/feature_map.hpp"
#include "epifeed/glm.hpp"
#include "epifeed/grid_dp.hpp"
#include "epifeed/trajectory_ops.hpp"
#include "epifeed/transitions.hpp"

#include <memory>
#include <vector>

namespace epifeed {

/// Frozen optimistic reward of one episode: w-hat, Sigma_t^{-1}, the bonus
/// coefficient sqrt(kappa) beta_t (times any experiment scale) and the count
/// bonus xi per (s, a).
class OptimisticReward {
 public:
  OptimisticReward(std::shared_ptr<const FeatureMap> map, Vec w_hat, Mat sigma_inv,
                   double coef, std::vector<double> xi);
  /// Reads Sigma^{-1} and xi from live estimator state.
  static OptimisticReward from_state(std::shared_ptr<const FeatureMap> map, const Vec& w_hat,
                                     const DesignMatrix& dm, double coef,
                                     const TransitionCounts& counts, const XiParams& xp);

  const Vec& w_hat() const { return w_hat_; }
  double coef() const { return coef_; }
  double xi(int s, int a) const { return xi_[static_cast<std::size_t>(s) * map_->num_actions() + a]; }

  double bonus_traj(std::span<const Step> tau) const;
  double bonus_sd(std::span<const Step> tau) const;
  /// sum_{h < H} xi(s_h, a_h) over the first H-1 steps
  double xi_sum(std::span<const Step> tau) const;
  double bar(std::span<const Step> tau, bool sum_decomposable) const;
  double tilde(std::span<const Step> tau, bool sum_decomposable) const;

  TrajectoryScore bar_score(bool sum_decomposable) const;
  TrajectoryScore tilde_score(bool sum_decomposable) const;
  /// Tables for the grid planner: w_h = w-hat^T phi_h, v_h = coef ||phi_h||,
  /// b_h = xi for h < H-1 and 0 at the last step.
  StepScores step_scores() const;

 private:
  std::shared_ptr<const FeatureMap> map_;
  Vec w_hat_;
  Mat sigma_inv_;
  double coef_;
  std::vector<double> xi_;
  std::vector<double> step_norm_;  // ||phi_h(s,a)||_{Sigma^{-1}} in [h][s][a]
};

}  // namespace epifeed
