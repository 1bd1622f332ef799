#include "epifeed/oracle_check.hpp"

#include "epifeed/agents.hpp"
#include "epifeed/exact_planner.hpp"
#include "epifeed/instances.hpp"
#include "epifeed/trajectory_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace epifeed {

namespace {

std::vector<double> random_simplex(int n, Rng& rng) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& x : p) sum += x = -std::log(1.0 - uniform01(rng));
  for (double& x : p) x /= sum;
  return p;
}

int uniform_int(int lo, int hi, Rng& rng) {
  return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
}

}  // namespace

MicroInstance random_micro_instance(Rng& rng, int max_states, int max_actions, int max_horizon) {
  const int S = uniform_int(1, max_states, rng);
  const int A = uniform_int(1, max_actions, rng);
  const int H = uniform_int(1, max_horizon, rng);
  std::vector<double> p;
  for (int k = 0; k < S * A; ++k) {
    const auto row = random_simplex(S, rng);
    p.insert(p.end(), row.begin(), row.end());
  }
  TabularMdp kernel(S, A, H, std::move(p), random_simplex(S, rng));
  StepScores sc(H, S, A);
  for (std::size_t o = 0; o < sc.w.size(); ++o) {
    sc.w[o] = 2.0 * uniform01(rng) - 1.0;
    sc.v[o] = 0.5 * uniform01(rng);
    sc.b[o] = 0.5 * uniform01(rng);
  }
  return {std::move(kernel), std::move(sc)};
}

GridDpComparison compare_grid_dp(const MicroInstance& inst, double eps, const GridDpOptions& opts) {
  const StepScores& sc = inst.scores;
  const TrajectoryScore score = [&sc](std::span<const Step> tau) { return sc.score(tau); };
  const double exact = exact_plan(inst.kernel, score).value;
  const GridDpPolicy gp = grid_dp_plan(inst.kernel, sc, sc.covering_zeta() + 1e-9, eps, opts);
  return {exact, exact_value(inst.kernel, gp, score), gp.planned_value(), gp.grid().size()};
}

std::vector<OracleItem> oracle_check(const OracleCheckOptions& opts) {
  std::vector<OracleItem> items;
  char buf[160];

  // Grid DP epsilon-optimality against the exact history-tree optimum.
  for (double eps : {0.05, 0.1}) {
    Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(eps * 1000)));
    double worst = std::numeric_limits<double>::infinity();
    std::string worst_name;
    int failures = 0;
    for (int k = 0; k < opts.grid_instances; ++k) {
      const MicroInstance inst = random_micro_instance(rng);
      GridDpComparison c = compare_grid_dp(inst, eps);
      if (k == opts.inject_eps_violation) c.grid_value -= 2.0 * eps;
      const double margin = c.grid_value - (c.exact_value - eps);
      std::snprintf(buf, sizeof buf, "instance %d (S=%d A=%d H=%d)", k, inst.kernel.num_states(),
                    inst.kernel.num_actions(), inst.kernel.horizon());
      if (margin < worst) {
        worst = margin;
        worst_name = buf;
      }
      if (margin < 0.0) {
        ++failures;
        std::snprintf(buf + std::char_traits<char>::length(buf), 40, " eps=%.2f", eps);
        items.push_back({std::string("grid_dp_eps_optimality/") + buf, false, margin, 0.0,
                         "executed grid policy fell more than eps below the exact optimum"});
      }
    }
    std::snprintf(buf, sizeof buf, "grid_dp_eps_optimality eps=%.2f (%d instances)", eps,
                  opts.grid_instances);
    items.push_back({buf, failures == 0, worst, 0.0, "smallest margin at " + worst_name});
  }

  // Exact planner against brute force over every deterministic history policy.
  {
    Rng rng(mix_seed(opts.seed, 77));
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const MicroInstance inst = random_micro_instance(rng, 2, 2, 2);
      const StepScores& sc = inst.scores;
      const TrajectoryScore score = [&sc](std::span<const Step> tau) { return sc.score(tau); };
      const int S = inst.kernel.num_states(), A = inst.kernel.num_actions(), H = inst.kernel.horizon();
      std::vector<std::size_t> level_sizes;
      std::size_t slots = 0, width = static_cast<std::size_t>(S);
      for (int h = 0; h < H; ++h) {
        level_sizes.push_back(width);
        slots += width;
        width *= static_cast<std::size_t>(S) * A;
      }
      double best = -std::numeric_limits<double>::infinity();
      std::vector<int> digits(slots, 0);
      for (;;) {
        std::vector<std::vector<std::int32_t>> levels;
        std::size_t pos = 0;
        for (std::size_t sz : level_sizes) {
          levels.emplace_back(digits.begin() + pos, digits.begin() + pos + sz);
          pos += sz;
        }
        best = std::max(best, exact_value(inst.kernel, TablePolicy(H, S, A, levels), score));
        std::size_t i = 0;
        while (i < slots && ++digits[i] == A) digits[i++] = 0;
        if (i == slots) break;
      }
      worst = std::max(worst, std::abs(best - exact_plan(inst.kernel, score).value));
    }
    items.push_back({"exact_plan_vs_policy_enumeration (10 instances)", worst <= 1e-12, worst, 1e-12,
                     "max |brute force - exact_plan|"});
  }

  // Confidence coverage on chain2 with the uniform behavior policy.
  {
    const Instance inst = chain2();
    int held = 0;
    for (int r = 0; r < opts.coverage_runs; ++r)
      held += run_coverage(inst, opts.coverage_episodes, 0.05,
                           mix_seed(opts.seed, 1000 + static_cast<std::uint64_t>(r)))
                  ? 1
                  : 0;
    const double freq = static_cast<double>(held) / opts.coverage_runs;
    std::snprintf(buf, sizeof buf, "confidence_coverage chain2 (%d runs x %lld episodes)",
                  opts.coverage_runs, static_cast<long long>(opts.coverage_episodes));
    items.push_back({buf, freq >= 0.95, freq, 0.95, "fraction of runs where the event held"});
  }
  return items;
}

void print_oracle_report(const std::vector<OracleItem>& items, std::ostream& os) {
  char buf[64];
  for (const auto& it : items) {
    std::snprintf(buf, sizeof buf, "%.6g (tol %.3g)", it.measured, it.tolerance);
    os << (it.pass ? "PASS " : "FAIL ") << it.name << ": " << buf << "  " << it.detail << '\n';
  }
}

nlohmann::json oracle_report_json(const std::vector<OracleItem>& items) {
  auto arr = nlohmann::json::array();
  for (const auto& it : items)
    arr.push_back({{"name", it.name},
                   {"pass", it.pass},
                   {"measured", it.measured},
                   {"tolerance", it.tolerance},
                   {"detail", it.detail}});
  return arr;
}

}  // namespace epifeed
