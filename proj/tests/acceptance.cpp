#include "epifeed/agents.hpp"
#include "epifeed/feature_map.hpp"
#include "epifeed/glm.hpp"
#include "epifeed/instances.hpp"
#include "epifeed/logistic.hpp"
#include "epifeed/oracle_check.hpp"
#include "epifeed/reinforce.hpp"
#include "epifeed/sym_eig.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace epifeed;

namespace {

// Pinned tolerances and budgets.
constexpr int kMicroInstances = 100;
constexpr double kPlanningSeconds = 120.0;
constexpr int kCoverageRuns = 200;
constexpr double kCoverageMin = 0.95;
constexpr double kOptimismMin = 0.99;
constexpr double kRatioMax = 0.5;
constexpr double kTunedGlmScale = 1e-7;
constexpr double kTunedBonusScale = 0.01;
constexpr double kFrequencySigmas = 3.0;
constexpr int kSandwichDraws = 10000;
constexpr double kSandwichSlack = 1e-9;
constexpr double kGradTol = 1e-10;
constexpr double kArgTol = 1e-6;
constexpr double kRewardMin = 0.8;
constexpr int kPassingSeeds = 3;
constexpr double kFdTol = 1e-4;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string csv_of(const RegretTrace& trace) {
  std::ostringstream os;
  write_trace_csv(trace, os);
  return os.str();
}

std::vector<RegretTrace> alg1_seeds(const Instance& inst, RunConfig rc, int seeds) {
  std::vector<RegretTrace> out;
  for (int s = 1; s <= seeds; ++s) {
    rc.seed = static_cast<std::uint64_t>(s);
    out.push_back(run_alg1(inst, rc));
  }
  return out;
}

// Shared between criteria: every logged alg1 run, and first-seed CSVs for the rerun check.
std::vector<RegretTrace> g_alg1_runs;
struct Rerun {
  std::string name;
  std::string csv;
  std::function<std::string()> again;
};
std::vector<Rerun> g_reruns;

RunConfig tuned_alg1() {
  RunConfig rc;
  rc.N = 2000;
  rc.planner = PlannerKind::Exact;
  rc.glm_bonus_scale = kTunedGlmScale;
  rc.bonus_scale = kTunedBonusScale;
  return rc;
}

RunConfig tuned_alg3() {
  RunConfig rc;
  rc.N = 3000;
  rc.planner = PlannerKind::GridDp;
  rc.n_eul = 100;
  rc.n_eval = 50;
  rc.glm_bonus_scale = kTunedGlmScale;
  rc.bonus_scale = kTunedBonusScale;
  rc.grid.parallel = false;
  return rc;
}

Outcome ac1_planning() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  int violations = 0;
  double worst = 1e300;
  for (int k = 0; k < kMicroInstances; ++k) {
    const auto inst = random_micro_instance(rng);
    for (double eps : {0.05, 0.1}) {
      const auto cmp = compare_grid_dp(inst, eps);
      const double margin = cmp.grid_value - (cmp.exact_value - eps);
      worst = std::min(worst, margin);
      if (margin < 0.0) ++violations;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {violations == 0 && secs <= kPlanningSeconds,
          fmt("%.0f violations over 200 comparisons, min margin %.4f, %.1f s (limit %.0f s)",
              violations, worst, secs, kPlanningSeconds)};
}

Outcome ac2_coverage() {
  const auto inst = chain2();
  int held = 0;
  for (int k = 0; k < kCoverageRuns; ++k)
    held += run_coverage(inst, 500, 0.05, static_cast<std::uint64_t>(k + 1)) ? 1 : 0;
  const double frac = static_cast<double>(held) / kCoverageRuns;
  return {frac >= kCoverageMin, fmt("event held in %.0f/200 runs (%.3f, need >= %.2f)", held, frac,
                                    kCoverageMin)};
}

Outcome ac3_optimism() {
  RunConfig rc;
  rc.N = 200;
  const auto runs = alg1_seeds(chain2(), rc, 20);
  std::size_t hits = 0, total = 0;
  for (const auto& tr : runs) {
    for (const auto& r : tr.records) {
      if (std::isnan(r.v_tilde_star)) continue;
      ++total;
      hits += r.v_tilde_star >= r.v_star ? 1 : 0;
    }
    g_alg1_runs.push_back(tr);
  }
  const double frac = total ? static_cast<double>(hits) / total : 0.0;
  return {total == 4000 && frac >= kOptimismMin,
          fmt("optimistic on %.0f/%.0f samples (%.4f, need >= %.2f)", hits, total, frac,
              kOptimismMin)};
}

Outcome ac4_alg1_regret() {
  const auto inst = chain2();
  const RunConfig rc = tuned_alg1();
  const auto runs = alg1_seeds(inst, rc, 20);
  std::vector<double> ratios;
  for (const auto& tr : runs) {
    ratios.push_back(tr.quartile_ratio());
    g_alg1_runs.push_back(tr);
  }
  g_reruns.push_back({"alg1 chain2 seed 1", csv_of(runs.front()), [inst, rc] {
                        RunConfig again = rc;
                        again.seed = 1;
                        return csv_of(run_alg1(inst, again));
                      }});
  const double med = median(ratios);
  return {med <= kRatioMax, fmt("median last/first quartile regret ratio %.3f (need <= %.2f), "
                                "glm_bonus_scale %.0e, bonus_scale %.2f",
                                med, kRatioMax, kTunedGlmScale, kTunedBonusScale)};
}

Outcome ac5_alg3_regret() {
  const auto inst = grid3();
  const RunConfig rc = tuned_alg3();
  std::vector<double> ratios;
  // Decade bins of the episode index over the planning phase.
  std::vector<double> observed(8, 0.0), expected(8, 0.0), variance(8, 0.0);
  for (int s = 1; s <= 20; ++s) {
    RunConfig c = rc;
    c.seed = static_cast<std::uint64_t>(s);
    const auto tr = run_alg3(inst, c);
    ratios.push_back(tr.quartile_ratio());
    for (const auto& r : tr.records) {
      if (r.b_t < 0) continue;
      const int bin = static_cast<int>(std::floor(std::log10(static_cast<double>(r.t))));
      const double p = 1.0 / std::cbrt(static_cast<double>(r.t));
      observed[bin] += r.b_t;
      expected[bin] += p;
      variance[bin] += p * (1.0 - p);
    }
    if (s == 1)
      g_reruns.push_back({"alg3 grid3 seed 1", csv_of(tr), [inst, c] { return csv_of(run_alg3(inst, c)); }});
  }
  bool freq_ok = true;
  std::string bins;
  for (int b = 0; b < 8; ++b) {
    if (expected[b] == 0.0) continue;
    const double z = (observed[b] - expected[b]) / std::sqrt(variance[b]);
    if (std::abs(z) > kFrequencySigmas) freq_ok = false;
    bins += fmt(" [1e%.0f: %.0f vs %.1f, z %.2f]", b, observed[b], expected[b], z);
  }
  const double med = median(ratios);
  return {med <= kRatioMax && freq_ok,
          fmt("median quartile ratio %.3f (need <= %.2f); b_t frequency by decade:", med, kRatioMax) +
              bins};
}

Outcome ac6_determinant() {
  int bad = 0;
  double worst = 0.0;
  for (const auto& tr : g_alg1_runs) {
    const double lhs = tr.elliptic_sum(), rhs = tr.determinant_bound();
    worst = std::max(worst, lhs / rhs);
    if (!(lhs <= rhs)) ++bad;
  }
  return {bad == 0 && !g_alg1_runs.empty(),
          fmt("%.0f of %.0f alg1 runs violate; max sum/bound %.4f", bad,
              static_cast<double>(g_alg1_runs.size()), worst)};
}

Vec uniform_vec(Rng& rng, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = -1.0 + 2.0 * uniform01(rng);
  return v;
}

int uniform_int(Rng& rng, int n) { return std::min(n - 1, static_cast<int>(uniform01(rng) * n)); }

Outcome ac7_sandwich() {
  Rng rng(777);
  int draws = 0, bad = 0;
  double worst = -1e300;
  while (draws < kSandwichDraws) {
    const int H = 1 + uniform_int(rng, 3);
    const int per = 1 + uniform_int(rng, 2);
    const int S = 2, A = 2, d = H * per;
    std::vector<Vec> tables;
    for (int h = 0; h < H; ++h)
      for (int i = 0; i < S * A; ++i) {
        Vec v = Vec::Zero(d);
        v.segment(h * per, per) = uniform_vec(rng, per) / (std::sqrt(per) * H);
        tables.push_back(v);
      }
    const auto map = FeatureMap::sum_decomposable(S, A, H, tables, true);
    DesignMatrix dm(d, 1.0 + 4.0 * uniform01(rng));
    const int updates = uniform_int(rng, 30);
    for (int k = 0; k < updates; ++k) {
      Vec u = uniform_vec(rng, d);
      dm.update(u / u.norm() * uniform01(rng));
    }
    const auto eig = symmetric_eig(dm.matrix());
    const double cond = eig.values(d - 1) / eig.values(0);
    for (int k = 0; k < 5 && draws < kSandwichDraws; ++k, ++draws) {
      Trajectory tau(H);
      for (auto& st : tau) st = {uniform_int(rng, S), uniform_int(rng, A)};
      std::vector<Vec> steps;
      for (int h = 0; h < H; ++h) steps.push_back(map.step_feature(h, tau[h].state, tau[h].action));
      const double beta = 1.0 + 10.0 * uniform01(rng);
      const double bt = bonus_traj(dm, beta, dm.kappa(), map.feature_of(tau));
      const double bs = bonus_sd(dm, beta, dm.kappa(), steps);
      const double gap = std::max(bt - bs, bs - std::sqrt(H * cond) * bt);
      worst = std::max(worst, gap);
      if (gap > kSandwichSlack) ++bad;
    }
  }
  return {bad == 0, fmt("%.0f of %.0f draws violate; worst excess %.2e (slack %.0e)", bad,
                        kSandwichDraws, worst, kSandwichSlack)};
}

LabeledSet random_labeled(Rng& rng, int d, int n) {
  const Vec w = 2.0 * uniform_vec(rng, d);
  LabeledSet data;
  for (int q = 0; q < n; ++q) {
    Vec phi = uniform_vec(rng, d);
    if (phi.norm() > 1.0) phi /= phi.norm();
    data.add(phi, bernoulli(mu(w.dot(phi)), rng) ? 1 : 0);
  }
  return data;
}

// Dense grid over a box containing the minimizer, then repeated zoomed grids.
Vec grid_polish_minimizer(const LabeledSet& data, int d) {
  // 1-strong convexity: ||w*|| <= ||grad L(0)||.
  const double radius = glm_gradient(data, Vec::Zero(d)).norm() + 1e-3;
  Vec best = Vec::Zero(d);
  double step = radius / 100.0;
  int half = 100;
  while (step > 1e-10) {
    const Vec center = best;
    double best_loss = glm_loss(data, best);
    std::vector<int> idx(d, -half);
    while (true) {
      Vec w = center;
      for (int i = 0; i < d; ++i) w(i) += idx[i] * step;
      const double loss = glm_loss(data, w);
      if (loss < best_loss) {
        best_loss = loss;
        best = w;
      }
      int i = 0;
      while (i < d && ++idx[i] > half) idx[i++] = -half;
      if (i == d) break;
    }
    step /= 5.0;
    half = 10;
  }
  return best;
}

Outcome ac8_estimator() {
  Rng rng(8080);
  double worst_grad = 0.0, worst_arg = 0.0;
  int small = 0;
  for (int k = 0; k < 100; ++k) {
    const int d = 1 + uniform_int(rng, 8);
    const int n = uniform_int(rng, 201);
    const auto data = random_labeled(rng, d, n);
    const Vec w = fit_w(data, d);
    worst_grad = std::max(worst_grad, glm_gradient(data, w).norm());
    if (d <= 2) {
      ++small;
      const Vec ref = grid_polish_minimizer(data, d);
      worst_arg = std::max(worst_arg, (ref - w).lpNorm<Eigen::Infinity>());
    }
  }
  return {worst_grad <= kGradTol && worst_arg <= kArgTol,
          fmt("max gradient norm %.2e (need <= %.0e); %.0f low-dimensional cases, max argument gap %.2e",
              worst_grad, kGradTol, small, worst_arg)};
}

double batch_objective(const MlpPolicy& pol, const std::vector<GridEpisode>& batch) {
  double total = 0.0;
  for (const auto& ep : batch)
    for (std::size_t h = 0; h < ep.actions.size(); ++h)
      total += ep.y * pol.log_prob(ep.observations[h], ep.actions[h]);
  return total / static_cast<double>(batch.size());
}

// Largest per-tensor relative error between the analytic and central-difference gradients.
double reinforce_fd_error() {
  const GoalGridEnv env;
  Rng rng(6);
  auto pol = MlpPolicy::default_grid_policy(rng);
  std::vector<GridEpisode> batch{rollout(env, pol, rng), rollout(env, pol, rng)};
  for (auto& ep : batch) ep.y = 1;
  const auto grad = reinforce_grad(pol, batch);
  std::vector<double> fd(grad.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double old = pol.params()[i];
    pol.params()[i] = old + h;
    const double up = batch_objective(pol, batch);
    pol.params()[i] = old - h;
    const double down = batch_objective(pol, batch);
    pol.params()[i] = old;
    fd[i] = (up - down) / (2 * h);
  }
  double worst = 0.0;
  std::size_t at = 0;
  const auto& sizes = pol.sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t weights = static_cast<std::size_t>(sizes[l + 1]) * sizes[l];
    for (std::size_t len : {weights, static_cast<std::size_t>(sizes[l + 1])}) {
      double diff = 0.0, norm = 0.0;
      for (std::size_t i = at; i < at + len; ++i) {
        diff += (fd[i] - grad[i]) * (fd[i] - grad[i]);
        norm += grad[i] * grad[i];
      }
      worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12));
      at += len;
    }
  }
  return worst;
}

std::string curve_csv(std::uint64_t seed, const TrainConfig& tc) {
  const GoalGridEnv env;
  Rng init(mix_seed(seed, 0x696e6974));
  MlpPolicy policy = MlpPolicy::default_grid_policy(init);
  TrainConfig c = tc;
  c.seed = seed;
  std::ostringstream os;
  write_curve_csv(train(env, policy, c), os);
  return os.str();
}

Outcome ac9_reinforce() {
  const GoalGridEnv env;
  const TrainConfig tc;
  int passing = 0;
  std::string finals;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng init(mix_seed(seed, 0x696e6974));
    MlpPolicy policy = MlpPolicy::default_grid_policy(init);
    TrainConfig c = tc;
    c.seed = seed;
    const auto curve = train(env, policy, c);
    const double final_reward = curve.back().mean_reward;
    passing += final_reward >= kRewardMin ? 1 : 0;
    finals += fmt(" %.3f", final_reward);
    if (seed == 1) {
      std::ostringstream os;
      write_curve_csv(curve, os);
      g_reruns.push_back({"reinforce seed 1", os.str(), [tc] { return curve_csv(1, tc); }});
    }
  }
  const double fd = reinforce_fd_error();
  return {passing >= kPassingSeeds && fd <= kFdTol,
          fmt("%.0f of 5 seeds reach >= %.1f after %.0f iterations (need %.0f); final rewards:",
              passing, kRewardMin, tc.iterations, kPassingSeeds) +
              finals + fmt("; worst per-tensor FD relative error %.2e (need <= %.0e)", fd, kFdTol)};
}

Outcome ac10_determinism() {
  int same = 0;
  std::string names;
  for (const auto& r : g_reruns) {
    const bool eq = r.again() == r.csv;
    same += eq ? 1 : 0;
    names += " [" + r.name + (eq ? ": identical]" : ": DIFFERS]");
  }
  return {same == static_cast<int>(g_reruns.size()) && g_reruns.size() == 3,
          fmt("%.0f of %.0f reruns byte-identical:", same, static_cast<double>(g_reruns.size())) +
              names};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"grid DP oracle equivalence", ac1_planning},
      {"confidence coverage", ac2_coverage},
      {"optimism frequency", ac3_optimism},
      {"alg1 sublinear regret", ac4_alg1_regret},
      {"alg3 sublinear regret and b_t frequency", ac5_alg3_regret},
      {"determinant bound", ac6_determinant},
      {"sandwich inequality", ac7_sandwich},
      {"estimator solver", ac8_estimator},
      {"REINFORCE gridworld", ac9_reinforce},
      {"determinism", ac10_determinism},
  };
  int failed = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += o.pass ? 0 : 1;
    std::printf("AC%d %s %s: %s (%.1f s)\n", index, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
