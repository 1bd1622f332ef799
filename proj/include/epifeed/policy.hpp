#pragma once

#include "epifeed/common.hpp"
#include "epifeed/mdp.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace epifeed {

/// pi_h(. | s_h, tau_{h-1}). Steps are 0-based; `prefix` has exactly h entries.
class HistoryPolicy {
 public:
  virtual ~HistoryPolicy() = default;
  virtual int num_actions() const = 0;
  virtual void distribution(int h, int s, std::span<const Step> prefix,
                            std::span<double> out) const = 0;

  // A mixture is sampled by drawing one component at episode start. Plain
  // policies are their own single component with weight one.
  virtual std::size_t num_components() const { return 1; }
  virtual const HistoryPolicy& component(std::size_t) const { return *this; }
  virtual double component_weight(std::size_t) const { return 1.0; }
};

class UniformPolicy final : public HistoryPolicy {
 public:
  explicit UniformPolicy(int num_actions);
  int num_actions() const override { return num_actions_; }
  void distribution(int h, int s, std::span<const Step> prefix,
                    std::span<double> out) const override;

 private:
  int num_actions_;
};

/// Per-step table S -> Delta(A), stored [h][s][a].
class MarkovPolicy final : public HistoryPolicy {
 public:
  MarkovPolicy(int horizon, int num_states, int num_actions, std::vector<double> probs);
  /// actions in [h][s] order
  static MarkovPolicy deterministic(int horizon, int num_states, int num_actions,
                                    std::span<const int> actions);

  int num_actions() const override { return num_actions_; }
  int num_states() const { return num_states_; }
  int horizon() const { return horizon_; }
  void distribution(int h, int s, std::span<const Step> prefix,
                    std::span<double> out) const override;
  double prob(int h, int s, int a) const {
    return probs_[(static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a];
  }
  const std::vector<double>& table() const { return probs_; }

 private:
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

/// Mixture over Markov policies: one member is drawn at the start of each
/// episode and followed for all H steps. `distribution` returns the
/// equivalent history-dependent law (members reweighted by the likelihood of
/// the observed prefix).
class MixturePolicy final : public HistoryPolicy {
 public:
  explicit MixturePolicy(std::vector<std::shared_ptr<const MarkovPolicy>> members,
                         std::vector<double> weights = {});
  /// Concatenates mixtures, weighting each input mixture equally.
  static MixturePolicy uniform_over(std::span<const MixturePolicy> parts);

  int num_actions() const override;
  void distribution(int h, int s, std::span<const Step> prefix,
                    std::span<double> out) const override;
  std::size_t num_components() const override { return members_.size(); }
  const HistoryPolicy& component(std::size_t i) const override { return *members_[i]; }
  double component_weight(std::size_t i) const override { return weights_[i]; }

  const std::vector<std::shared_ptr<const MarkovPolicy>>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<std::shared_ptr<const MarkovPolicy>> members_;
  std::vector<double> weights_;
};

/// Deterministic policy over full prefixes; micro scale only. Level h stores
/// (|S||A|)^h * |S| actions indexed by prefix_code(prefix) * |S| + s.
class TablePolicy final : public HistoryPolicy {
 public:
  TablePolicy(int horizon, int num_states, int num_actions,
              std::vector<std::vector<std::int32_t>> levels);
  int num_actions() const override { return num_actions_; }
  void distribution(int h, int s, std::span<const Step> prefix,
                    std::span<double> out) const override;
  int action(int h, int s, std::span<const Step> prefix) const;

 private:
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<std::vector<std::int32_t>> levels_;
};

/// Mixed-radix code of a prefix: sum over steps of (s*|A| + a) digits, most
/// significant first.
std::uint64_t prefix_code(std::span<const Step> prefix, int num_states, int num_actions);

}  // namespace epifeed
