#include "epifeed/exact_planner.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace epifeed {

namespace {

struct PrefixSolver {
  const TabularMdp& kernel;
  const TrajectoryScore& score;
  std::vector<std::vector<std::int32_t>>& levels;
  Trajectory prefix;

  // Value from step h on, given the current prefix (length h) and state s.
  double solve(int s, std::uint64_t code) {
    const int h = static_cast<int>(prefix.size());
    const int S = kernel.num_states();
    const int A = kernel.num_actions();
    const bool last = h + 1 == kernel.horizon();
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < A; ++a) {
      prefix.push_back({s, a});
      double q;
      if (last) {
        q = score(prefix);
      } else {
        const std::uint64_t child = code * static_cast<std::uint64_t>(S * A) +
                                    static_cast<std::uint64_t>(s) * A + a;
        const auto row = kernel.row(s, a);
        q = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          const double v = solve(s2, child);
          q += row[s2] * v;
        }
      }
      prefix.pop_back();
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    levels[h][code * S + s] = best_a;
    return best;
  }
};

}  // namespace

ExactPlan exact_plan(const TabularMdp& kernel, const TrajectoryScore& score, double cap) {
  if (!enumerable(kernel, cap))
    throw SizeError("exact_plan: (|S||A|)^H exceeds cap " + std::to_string(cap));
  const int S = kernel.num_states();
  const int A = kernel.num_actions();
  const int H = kernel.horizon();
  std::vector<std::vector<std::int32_t>> levels(H);
  std::uint64_t width = S;
  for (int h = 0; h < H; ++h) {
    levels[h].assign(width, 0);
    width *= static_cast<std::uint64_t>(S) * A;
  }
  PrefixSolver solver{kernel, score, levels, {}};
  solver.prefix.reserve(H);
  double value = 0.0;
  const auto rho = kernel.init_dist();
  for (int s = 0; s < S; ++s) {
    const double v = solver.solve(s, 0);
    value += rho[s] * v;
  }
  return {TablePolicy(H, S, A, std::move(levels)), value};
}

}  // namespace epifeed
