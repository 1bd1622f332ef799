#pragma once

#include "epifeed/common.hpp"

#include <span>
#include <vector>

namespace epifeed {

struct Step {
  int state = 0;
  int action = 0;
  friend bool operator==(const Step&, const Step&) = default;
};

/// The H state-action pairs of one episode, steps indexed 0..H-1.
using Trajectory = std::vector<Step>;

/// Finite-horizon tabular MDP. The transition tensor is stored flat in
/// [s][a][s'] order. Immutable after construction.
class TabularMdp {
 public:
  TabularMdp(int num_states, int num_actions, int horizon,
             std::vector<double> transitions, std::vector<double> init_dist);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }

  double p(int s, int a, int next) const {
    return transitions_[row_offset(s, a) + next];
  }
  std::span<const double> row(int s, int a) const {
    return {transitions_.data() + row_offset(s, a),
            static_cast<std::size_t>(num_states_)};
  }
  std::span<const double> init_dist() const { return init_dist_; }
  const std::vector<double>& transitions() const { return transitions_; }

  /// Same shape and initial distribution, different kernel (used for P-hat).
  TabularMdp with_transitions(std::vector<double> transitions) const;

  /// Throws StructuralError unless tau has length H and in-range indices.
  void validate(std::span<const Step> tau) const;

 private:
  std::size_t row_offset(int s, int a) const {
    return (static_cast<std::size_t>(s) * num_actions_ + a) * num_states_;
  }

  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> transitions_;
  std::vector<double> init_dist_;
};

}  // namespace epifeed
