#include "epifeed/logistic.hpp"

#include "epifeed/trajectory_ops.hpp"

#include <cmath>

namespace epifeed {

double mu(double z) {
  if (!std::isfinite(z)) throw DomainError("mu: non-finite argument");
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double mu_prime(double z) {
  if (!std::isfinite(z)) throw DomainError("mu_prime: non-finite argument");
  const double e = std::exp(-std::abs(z));
  return e / ((1.0 + e) * (1.0 + e));
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double kappa(double B, double max_feat_norm) {
  if (B < 0.0) throw DomainError("kappa: B must be nonnegative");
  return 1.0 / mu_prime(B * max_feat_norm);
}

double kappa_enumerated(double B, const FeatureMap& map) {
  double best = 0.0;
  for (const Trajectory& tau :
       all_sequences(map.num_states(), map.num_actions(), map.horizon()))
    best = std::max(best, map.feature_of(tau).norm());
  return kappa(B, best);
}

LogisticRewardModel::LogisticRewardModel(Vec w_star, double B,
                                         std::shared_ptr<const FeatureMap> map)
    : w_star_(std::move(w_star)), B_(B), map_(std::move(map)) {
  if (!map_) throw StructuralError("LogisticRewardModel: null feature map");
  if (w_star_.size() != map_->dim())
    throw StructuralError("LogisticRewardModel: w* dimension does not match the feature map");
  if (!(B_ > 0.0)) throw DomainError("LogisticRewardModel: B must be positive");
  if (w_star_.norm() > B_ * (1.0 + 1e-12))
    throw DomainError("LogisticRewardModel: ||w*|| exceeds B");
}

LogisticRewardModel LogisticRewardModel::random_on_sphere(double B,
                                                          std::shared_ptr<const FeatureMap> map,
                                                          Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec w(map->dim());
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);
    norm = w.norm();
  }
  w *= B / norm;
  return LogisticRewardModel(std::move(w), B, std::move(map));
}

double LogisticRewardModel::logit(std::span<const Step> tau) const {
  return w_star_.dot(map_->feature_of(tau));
}

int LogisticRewardModel::sample_label(std::span<const Step> tau, Rng& rng) const {
  return bernoulli(mean(tau), rng) ? 1 : 0;
}

}  // namespace epifeed
