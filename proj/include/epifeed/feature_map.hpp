#pragma once

#include "epifeed/common.hpp"
#include "epifeed/mdp.hpp"

#include <span>
#include <vector>

namespace epifeed {

enum class FeatureKind { DirectTabular, SumDecomposable, CustomTable };

/// Trajectory embedding phi(tau) = sum_h phi_h(s_h, a_h).
///
/// DirectTabular places one unit (times `scale`) at index
/// h*|S||A| + s*|A| + a for every step; the default scale 1/sqrt(H) makes
/// ||phi(tau)||_2 = 1 for every trajectory. The table variants carry explicit
/// per-step vectors. Construction verifies ||phi(tau)||_2 <= 1 + 1e-9 over all
/// action-state sequences and, when the orthogonality flag is claimed, that
/// blocks of different steps are mutually orthogonal.
class FeatureMap {
 public:
  static FeatureMap direct(int num_states, int num_actions, int horizon,
                           bool normalize = true);
  /// `tables` holds H*|S|*|A| vectors in [h][s][a] order.
  static FeatureMap sum_decomposable(int num_states, int num_actions, int horizon,
                                     std::vector<Vec> tables, bool orthogonal);
  /// User-supplied tables; orthogonality is detected rather than declared.
  static FeatureMap custom(int num_states, int num_actions, int horizon,
                           std::vector<Vec> tables);

  FeatureKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }
  double scale() const { return scale_; }
  bool orthogonal() const { return orthogonal_; }
  /// Upper bound on ||phi(tau)||_2 over all trajectories (exact for
  /// orthogonal maps).
  double max_norm() const { return max_norm_; }

  Vec step_feature(int h, int s, int a) const;
  /// acc += phi_h(s, a)
  void add_step_feature(int h, int s, int a, Vec& acc) const;
  Vec feature_of(std::span<const Step> tau) const;

 private:
  FeatureMap() = default;
  void check_index(int h, int s, int a) const;
  void finalize(bool claim_orthogonal);

  FeatureKind kind_ = FeatureKind::DirectTabular;
  int num_states_ = 0;
  int num_actions_ = 0;
  int horizon_ = 0;
  int dim_ = 0;
  double scale_ = 1.0;
  bool orthogonal_ = false;
  double max_norm_ = 0.0;
  std::vector<Vec> tables_;
};

}  // namespace epifeed
