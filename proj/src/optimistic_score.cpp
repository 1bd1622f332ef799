#include "epifeed/optimistic_score.hpp"

#include "epifeed/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace epifeed {

OptimisticReward::OptimisticReward(std::shared_ptr<const FeatureMap> map, Vec w_hat,
                                   Mat sigma_inv, double coef, std::vector<double> xi)
    : map_(std::move(map)),
      w_hat_(std::move(w_hat)),
      sigma_inv_(std::move(sigma_inv)),
      coef_(coef),
      xi_(std::move(xi)) {
  const int d = map_->dim(), H = map_->horizon(), S = map_->num_states(), A = map_->num_actions();
  if (w_hat_.size() != d || sigma_inv_.rows() != d || sigma_inv_.cols() != d)
    throw StructuralError("OptimisticReward: dimension mismatch");
  if (xi_.size() != static_cast<std::size_t>(S) * A)
    throw StructuralError("OptimisticReward: xi table must have |S||A| entries");
  if (!(coef_ >= 0.0)) throw DomainError("OptimisticReward: bonus coefficient must be >= 0");
  step_norm_.resize(static_cast<std::size_t>(H) * S * A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const Vec f = map_->step_feature(h, s, a);
        step_norm_[(static_cast<std::size_t>(h) * S + s) * A + a] =
            std::sqrt(std::max(0.0, f.dot(sigma_inv_ * f)));
      }
}

OptimisticReward OptimisticReward::from_state(std::shared_ptr<const FeatureMap> map,
                                              const Vec& w_hat, const DesignMatrix& dm,
                                              double coef, const TransitionCounts& counts,
                                              const XiParams& xp) {
  std::vector<double> xi(static_cast<std::size_t>(counts.num_states()) * counts.num_actions());
  for (int s = 0; s < counts.num_states(); ++s)
    for (int a = 0; a < counts.num_actions(); ++a)
      xi[static_cast<std::size_t>(s) * counts.num_actions() + a] = counts.xi(s, a, xp);
  return OptimisticReward(std::move(map), w_hat, dm.inverse(), coef, std::move(xi));
}

double OptimisticReward::bonus_traj(std::span<const Step> tau) const {
  const Vec phi = map_->feature_of(tau);
  return coef_ * std::sqrt(std::max(0.0, phi.dot(sigma_inv_ * phi)));
}

double OptimisticReward::bonus_sd(std::span<const Step> tau) const {
  const int S = map_->num_states(), A = map_->num_actions();
  double sum = 0.0;
  for (std::size_t h = 0; h < tau.size(); ++h)
    sum += step_norm_[(h * S + tau[h].state) * A + tau[h].action];
  return coef_ * sum;
}

double OptimisticReward::xi_sum(std::span<const Step> tau) const {
  double sum = 0.0;
  for (std::size_t h = 0; h + 1 < tau.size(); ++h) sum += xi(tau[h].state, tau[h].action);
  return sum;
}

double OptimisticReward::bar(std::span<const Step> tau, bool sum_decomposable) const {
  const Vec phi = map_->feature_of(tau);
  const double bonus = sum_decomposable ? bonus_sd(tau) : bonus_traj(tau);
  return bar_mu(w_hat_, phi, bonus);
}

double OptimisticReward::tilde(std::span<const Step> tau, bool sum_decomposable) const {
  return tilde_mu(bar(tau, sum_decomposable), xi_sum(tau));
}

TrajectoryScore OptimisticReward::bar_score(bool sum_decomposable) const {
  return [this, sum_decomposable](std::span<const Step> tau) { return bar(tau, sum_decomposable); };
}

TrajectoryScore OptimisticReward::tilde_score(bool sum_decomposable) const {
  return [this, sum_decomposable](std::span<const Step> tau) {
    return tilde(tau, sum_decomposable);
  };
}

StepScores OptimisticReward::step_scores() const {
  const int H = map_->horizon(), S = map_->num_states(), A = map_->num_actions();
  StepScores sc(H, S, A);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const auto o = sc.offset(h, s, a);
        sc.w[o] = w_hat_.dot(map_->step_feature(h, s, a));
        sc.v[o] = coef_ * step_norm_[o];
        sc.b[o] = h + 1 < H ? xi(s, a) : 0.0;
      }
  return sc;
}

}  // namespace epifeed
