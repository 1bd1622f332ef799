#pragma once

#include "epifeed/exploration.hpp"
#include "epifeed/glm.hpp"
#include "epifeed/grid_dp.hpp"
#include "epifeed/instances.hpp"
#include "epifeed/optimistic_score.hpp"
#include "epifeed/policy.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace epifeed {

enum class PlannerKind { Exact, GridDp };

struct RunConfig {
  std::int64_t N = 1000;
  double delta_bar = 0.05;           // delta = delta_bar/(6N) (alg1), delta_bar/(12N) (alg3)
  PlannerKind planner = PlannerKind::Exact;
  double omega = 0.2;
  int n_eul = 500;
  int n_eval = 200;
  int n_max = 64;
  double eps_dp = 0.0;               // <= 0 selects N^{-1/3}
  bool paper_zeta = false;           // zeta = max(||w||max||phi||, sqrt(H) coef, 2H) instead of the covering bound
  GridDpOptions grid;
  double bonus_scale = 1.0;          // scales the leading constant of xi
  double glm_bonus_scale = 1.0;      // scales sqrt(kappa) beta_t
  std::uint64_t seed = 1;
  int mc_samples = 10000;            // value evaluation when enumeration is too large
  double enumeration_cap = 1e5;
  bool timing = false;               // fill the ms column
  bool check_confidence = false;     // evaluate the confidence event at every episode
};

struct EpisodeRecord {
  std::int64_t t = 0;
  double v_t = 0.0;          // V^{(t)} of the played policy under the true model
  double v_t_se = 0.0;       // Monte-Carlo standard error, 0 when exact
  double v_star = 0.0;
  double v_tilde = 0.0;      // optimistic value of the played policy under P-hat (NaN if unplanned)
  double v_tilde_star = 0.0; // planner's optimistic optimum under P-hat
  int y = 0;
  double regret_cum = 0.0;
  int b_t = 0;               // alg3: 1 = exploration mixture, 0 = plan, -1 = mixture-search phase; alg1: 0
  double ms = 0.0;
  double elliptic_sq = 0.0;  // ||phi(tau)||^2_{Sigma_t^{-1}} before the update (NaN if Sigma not updated)
  int confidence_ok = -1;    // 1/0 when checked, -1 otherwise
};

struct RegretTrace {
  std::string algorithm;
  std::vector<EpisodeRecord> records;
  double kappa = 0.0;
  int d = 0;
  std::int64_t n_exp = 0;
  int n_loop = 0;
  DesignMatrix final_design{1, 1.0};
  std::vector<Trajectory> trajectories;  // tau^{(t)} for audit

  /// mean per-episode regret over [begin, end) records
  double mean_regret(std::size_t begin, std::size_t end) const;
  /// last-quarter mean divided by first-quarter mean
  double quartile_ratio() const;
  double optimism_frequency() const;
  /// sum_t ||phi^{(t)}||^2_{Sigma_t^{-1}} over the episodes that fed Sigma
  double elliptic_sum() const;
  /// 2 d max{1, 1/kappa} log(1 + n/(kappa d)) for the n episodes that fed Sigma
  double determinant_bound() const;
};

/// V* = max over history-dependent policies of E[mu(w*^T phi)] under the
/// true kernel (exact planner on the true model).
double optimal_value(const Instance& inst, double cap = 1e5);

RegretTrace run_alg1(const Instance& inst, const RunConfig& cfg);
RegretTrace run_alg3(const Instance& inst, const RunConfig& cfg);

/// (V^{(t)}, V-bar^{(t)}, V-tilde^{(t)}) for `policy`: E_P[mu(w*^T phi)],
/// E_P[mu-bar] and E_{P-hat}[mu-tilde], by enumeration.
struct DiagnosticValues {
  double v;
  double v_bar;
  double v_tilde;
};
DiagnosticValues diagnostics_values(const OptimisticReward& reward, const Instance& inst,
                                    const TabularMdp& p_hat, const HistoryPolicy& policy,
                                    bool sum_decomposable);

/// Runs the uniform behavior policy for N episodes, refitting w-hat every
/// episode, and reports whether the confidence event held at every t over all
/// action-state sequences.
bool run_coverage(const Instance& inst, std::int64_t N, double delta, std::uint64_t seed);

/// Fixed-precision CSV: t,v_t,v_star,regret_cum,y,b_t,ms.
void write_trace_csv(const RegretTrace& trace, std::ostream& os);
nlohmann::json trace_summary(const RegretTrace& trace);

}  // namespace epifeed
