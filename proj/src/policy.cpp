#include "epifeed/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epifeed {

std::uint64_t prefix_code(std::span<const Step> prefix, int num_states, int num_actions) {
  const std::uint64_t radix = static_cast<std::uint64_t>(num_states) * num_actions;
  std::uint64_t code = 0;
  for (const Step& st : prefix)
    code = code * radix + static_cast<std::uint64_t>(st.state) * num_actions + st.action;
  return code;
}

UniformPolicy::UniformPolicy(int num_actions) : num_actions_(num_actions) {
  if (num_actions < 1) throw StructuralError("UniformPolicy: no actions");
}

void UniformPolicy::distribution(int, int, std::span<const Step>, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 1.0 / num_actions_);
}

MarkovPolicy::MarkovPolicy(int horizon, int num_states, int num_actions,
                           std::vector<double> probs)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions),
      probs_(std::move(probs)) {
  const auto n = static_cast<std::size_t>(horizon) * num_states * num_actions;
  if (probs_.size() != n) throw StructuralError("MarkovPolicy: table has wrong size");
  for (std::size_t off = 0; off < n; off += num_actions_) {
    double sum = 0.0;
    for (int a = 0; a < num_actions_; ++a) {
      if (!(probs_[off + a] >= 0.0)) throw StructuralError("MarkovPolicy: negative probability");
      sum += probs_[off + a];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw StructuralError("MarkovPolicy: row does not sum to 1");
  }
}

MarkovPolicy MarkovPolicy::deterministic(int horizon, int num_states, int num_actions,
                                         std::span<const int> actions) {
  if (actions.size() != static_cast<std::size_t>(horizon) * num_states)
    throw StructuralError("MarkovPolicy::deterministic: wrong action count");
  std::vector<double> probs(actions.size() * num_actions, 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= num_actions)
      throw StructuralError("MarkovPolicy::deterministic: action out of range");
    probs[i * num_actions + actions[i]] = 1.0;
  }
  return MarkovPolicy(horizon, num_states, num_actions, std::move(probs));
}

void MarkovPolicy::distribution(int h, int s, std::span<const Step>,
                                std::span<double> out) const {
  const auto off = (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_;
  std::copy_n(probs_.begin() + static_cast<std::ptrdiff_t>(off), num_actions_, out.begin());
}

MixturePolicy::MixturePolicy(std::vector<std::shared_ptr<const MarkovPolicy>> members,
                             std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw StructuralError("MixturePolicy: no members");
  if (weights_.empty()) weights_.assign(members_.size(), 1.0 / members_.size());
  if (weights_.size() != members_.size())
    throw StructuralError("MixturePolicy: weight count mismatch");
  const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw StructuralError("MixturePolicy: weights do not sum to 1");
  for (const auto& m : members_)
    if (m->num_actions() != members_.front()->num_actions())
      throw StructuralError("MixturePolicy: members disagree on |A|");
}

MixturePolicy MixturePolicy::uniform_over(std::span<const MixturePolicy> parts) {
  if (parts.empty()) throw StructuralError("MixturePolicy::uniform_over: empty");
  std::vector<std::shared_ptr<const MarkovPolicy>> members;
  std::vector<double> weights;
  for (const MixturePolicy& part : parts) {
    for (std::size_t i = 0; i < part.members_.size(); ++i) {
      members.push_back(part.members_[i]);
      weights.push_back(part.weights_[i] / static_cast<double>(parts.size()));
    }
  }
  return MixturePolicy(std::move(members), std::move(weights));
}

int MixturePolicy::num_actions() const { return members_.front()->num_actions(); }

void MixturePolicy::distribution(int h, int s, std::span<const Step> prefix,
                                 std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const MarkovPolicy& m = *members_[i];
    double like = weights_[i];
    for (int l = 0; l < h && like > 0.0; ++l)
      like *= m.prob(l, prefix[l].state, prefix[l].action);
    if (like <= 0.0) continue;
    total += like;
    for (int a = 0; a < m.num_actions(); ++a) out[a] += like * m.prob(h, s, a);
  }
  if (total <= 0.0) {
    // Prefix impossible under every member: fall back to the prior mixture.
    for (std::size_t i = 0; i < members_.size(); ++i)
      for (int a = 0; a < num_actions(); ++a)
        out[a] += weights_[i] * members_[i]->prob(h, s, a);
    return;
  }
  for (double& x : out) x /= total;
}

TablePolicy::TablePolicy(int horizon, int num_states, int num_actions,
                         std::vector<std::vector<std::int32_t>> levels)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions),
      levels_(std::move(levels)) {
  if (levels_.size() != static_cast<std::size_t>(horizon_))
    throw StructuralError("TablePolicy: need one level per step");
  std::uint64_t width = static_cast<std::uint64_t>(num_states_);
  for (int h = 0; h < horizon_; ++h) {
    if (levels_[h].size() != width) throw StructuralError("TablePolicy: level has wrong size");
    width *= static_cast<std::uint64_t>(num_states_) * num_actions_;
  }
}

int TablePolicy::action(int h, int s, std::span<const Step> prefix) const {
  const std::uint64_t code = prefix_code(prefix.first(static_cast<std::size_t>(h)),
                                         num_states_, num_actions_);
  return levels_[h][code * num_states_ + s];
}

void TablePolicy::distribution(int h, int s, std::span<const Step> prefix,
                               std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[action(h, s, prefix)] = 1.0;
}

}  // namespace epifeed
