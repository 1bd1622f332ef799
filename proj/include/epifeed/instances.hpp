#pragma once

#include "epifeed/feature_map.hpp"
#include "epifeed/logistic.hpp"
#include "epifeed/mdp.hpp"

#include <memory>
#include <string>
#include <vector>

namespace epifeed {

/// An environment together with its feature map and hidden labeler.
struct Instance {
  std::string name;
  std::shared_ptr<const TabularMdp> mdp;
  std::shared_ptr<const FeatureMap> map;
  std::shared_ptr<const LogisticRewardModel> model;
};

/// 2 states, 2 actions, H = 2, direct features (d = 8).
Instance chain2();
/// 3 states, 2 actions, H = 2, orthogonal per-step blocks of dimension 2
/// (d = 4). phi_h(s, a) = +/- u_s / sqrt(2) with u_s unit vectors at 0, 60
/// and 120 degrees and the sign set by the action, so every direction can be
/// explored at every step.
Instance grid3();

/// Names accepted by builtin_instance (the tabular ones).
std::vector<std::string> builtin_instance_names();
/// Throws ConfigError for unknown names.
Instance builtin_instance(const std::string& name);

}  // namespace epifeed
