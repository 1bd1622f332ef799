#pragma once

#include "epifeed/common.hpp"
#include "epifeed/feature_map.hpp"
#include "epifeed/mdp.hpp"

#include <memory>
#include <span>

namespace epifeed {

/// Logistic link 1/(1+e^{-z}); throws DomainError on non-finite input.
double mu(double z);
/// mu'(z) = mu(z)(1 - mu(z)), evaluated as e^{-|z|}/(1+e^{-|z|})^2.
double mu_prime(double z);
/// log(1 + e^z) without overflow.
double softplus(double z);

/// Supremum of 1/mu'(w^T phi) over ||w|| <= B, ||phi|| <= max_feat_norm.
double kappa(double B, double max_feat_norm);

/// Same supremum, but taking the largest ||phi(tau)|| over every (s,a)
/// sequence of the map instead of a declared bound.
double kappa_enumerated(double B, const FeatureMap& map);

/// Hidden labeler: y ~ Bernoulli(mu(w*^T phi(tau))).
class LogisticRewardModel {
 public:
  LogisticRewardModel(Vec w_star, double B, std::shared_ptr<const FeatureMap> map);

  /// w* drawn uniformly on the sphere of radius B.
  static LogisticRewardModel random_on_sphere(double B, std::shared_ptr<const FeatureMap> map,
                                              Rng& rng);

  const Vec& w_star() const { return w_star_; }
  double B() const { return B_; }
  const FeatureMap& feature_map() const { return *map_; }
  std::shared_ptr<const FeatureMap> feature_map_ptr() const { return map_; }

  double logit(std::span<const Step> tau) const;
  double mean(std::span<const Step> tau) const { return mu(logit(tau)); }
  int sample_label(std::span<const Step> tau, Rng& rng) const;

 private:
  Vec w_star_;
  double B_;
  std::shared_ptr<const FeatureMap> map_;
};

}  // namespace epifeed
