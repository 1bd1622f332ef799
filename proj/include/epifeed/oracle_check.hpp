#pragma once

#include "epifeed/grid_dp.hpp"
#include "epifeed/mdp.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace epifeed {

/// Random planning instance: |S| <= 3, |A| <= 2, H <= 3, random kernel and
/// initial law, w tables in [-1, 1], v and b tables in [0, 0.5].
struct MicroInstance {
  TabularMdp kernel;
  StepScores scores;
};
MicroInstance random_micro_instance(Rng& rng, int max_states = 3, int max_actions = 2,
                                    int max_horizon = 3);

struct GridDpComparison {
  double exact_value;   // exact_plan optimum
  double grid_value;    // executed grid policy, by enumeration
  double planned_value; // the grid DP's own estimate
  std::int64_t m;
};
GridDpComparison compare_grid_dp(const MicroInstance& inst, double eps,
                                 const GridDpOptions& opts = {});

struct OracleItem {
  std::string name;
  bool pass;
  double measured;   // the quantity compared against the tolerance
  double tolerance;
  std::string detail;
};

struct OracleCheckOptions {
  int grid_instances = 100;
  std::uint64_t seed = 20240601;
  int coverage_runs = 20;
  std::int64_t coverage_episodes = 100;
  // Test hook: subtract 2 eps from the executed grid value of this instance index.
  int inject_eps_violation = -1;
};

std::vector<OracleItem> oracle_check(const OracleCheckOptions& opts = {});
void print_oracle_report(const std::vector<OracleItem>& items, std::ostream& os);
nlohmann::json oracle_report_json(const std::vector<OracleItem>& items);

}  // namespace epifeed
