#pragma once

#include "epifeed/common.hpp"
#include "epifeed/mdp.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace epifeed {

/// Constants entering the count bonus xi.
struct XiParams {
  std::int64_t N = 1;     // total episodes
  double delta = 0.05;
  int num_states = 1;
  int num_actions = 1;
  int horizon = 1;
  double bonus_scale = 1.0;  // multiplies the leading constant 4; 1.0 is the verbatim bonus
};

/// min{2, 4 sqrt(log(6 (|S||A|H)^H (8 N H^2)^{|S|} max(log n, 1) / delta) / n)},
/// and 2 when n = 0. Throws DomainError for delta outside (0, 1].
double xi_bonus(std::int64_t n, const XiParams& p);

/// Visit counts N(s,a) and N(s'|s,a).
class TransitionCounts {
 public:
  TransitionCounts(int num_states, int num_actions);

  /// Counts the H-1 observed transitions of tau; the final pair has no
  /// successor and changes nothing.
  void ingest(std::span<const Step> tau);

  std::int64_t visits(int s, int a) const { return n_sa_[index(s, a)]; }
  std::int64_t visits(int s, int a, int next) const {
    return n_sas_[index(s, a) * num_states_ + next];
  }
  bool visited(int s, int a) const { return visits(s, a) > 0; }

  /// Empirical row N(.|s,a)/N(s,a), or uniform for unvisited pairs.
  std::vector<double> p_hat(int s, int a) const;
  /// The full empirical kernel in [s][a][s'] order.
  std::vector<double> p_hat_tensor() const;
  /// P-hat as an MDP sharing the shape and rho of `shape`.
  TabularMdp empirical_mdp(const TabularMdp& shape) const;

  double xi(int s, int a, const XiParams& p) const { return xi_bonus(visits(s, a), p); }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  nlohmann::json to_json() const;
  static TransitionCounts from_json(const nlohmann::json& j);

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * num_actions_ + a;
  }

  int num_states_;
  int num_actions_;
  std::vector<std::int64_t> n_sa_;
  std::vector<std::int64_t> n_sas_;
};

}  // namespace epifeed
