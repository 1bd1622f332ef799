#include "epifeed/mdp.hpp"

#include <cmath>
#include <string>

namespace epifeed {

namespace {

void check_distribution(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw StructuralError(what + ": negative or non-finite probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw StructuralError(what + ": probabilities sum to " + std::to_string(sum));
}

}  // namespace

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon,
                       std::vector<double> transitions,
                       std::vector<double> init_dist)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      transitions_(std::move(transitions)),
      init_dist_(std::move(init_dist)) {
  if (num_states_ < 1 || num_actions_ < 1 || horizon_ < 1)
    throw StructuralError("TabularMdp: |S|, |A| and H must be positive");
  const auto expected = static_cast<std::size_t>(num_states_) * num_actions_ * num_states_;
  if (transitions_.size() != expected)
    throw StructuralError("TabularMdp: transition tensor has wrong size");
  if (init_dist_.size() != static_cast<std::size_t>(num_states_))
    throw StructuralError("TabularMdp: init_dist has wrong size");
  for (int s = 0; s < num_states_; ++s)
    for (int a = 0; a < num_actions_; ++a)
      check_distribution(row(s, a), "TabularMdp: row P[" + std::to_string(s) +
                                        "][" + std::to_string(a) + "]");
  check_distribution(init_dist_, "TabularMdp: init_dist");
}

TabularMdp TabularMdp::with_transitions(std::vector<double> transitions) const {
  return TabularMdp(num_states_, num_actions_, horizon_, std::move(transitions),
                    init_dist_);
}

void TabularMdp::validate(std::span<const Step> tau) const {
  if (tau.size() != static_cast<std::size_t>(horizon_))
    throw StructuralError("trajectory length " + std::to_string(tau.size()) +
                          " != horizon " + std::to_string(horizon_));
  for (const Step& st : tau) {
    if (st.state < 0 || st.state >= num_states_ || st.action < 0 ||
        st.action >= num_actions_)
      throw StructuralError("trajectory index out of range");
  }
}

}  // namespace epifeed
