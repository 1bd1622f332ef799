#include "epifeed/agents.hpp"

#include "epifeed/exact_planner.hpp"
#include "epifeed/logistic.hpp"
#include "epifeed/trajectory_ops.hpp"
#include "epifeed/transitions.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace epifeed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent generator streams inside one run.
enum Stream : std::uint64_t { kEnv = 1, kLabel = 2, kCoin = 3, kEval = 4 };

struct Streams {
  Rng env, label, coin, eval;
  explicit Streams(std::uint64_t seed)
      : env(mix_seed(seed, kEnv)),
        label(mix_seed(seed, kLabel)),
        coin(mix_seed(seed, kCoin)),
        eval(mix_seed(seed, kEval)) {}
};

TrajectoryScore true_score(const Instance& inst) {
  return [model = inst.model](std::span<const Step> tau) { return model->mean(tau); };
}

McEstimate evaluate(const Instance& inst, const HistoryPolicy& policy, const RunConfig& cfg,
                    Rng& rng) {
  if (enumerable(*inst.mdp, cfg.enumeration_cap))
    return {exact_value(*inst.mdp, policy, true_score(inst), cfg.enumeration_cap), 0.0};
  return monte_carlo_value(*inst.mdp, policy, true_score(inst), cfg.mc_samples, rng);
}

void validate(const Instance& inst, const RunConfig& cfg) {
  if (cfg.N < 1) throw ConfigError("N must be at least 1");
  if (!(cfg.delta_bar > 0.0 && cfg.delta_bar <= 1.0)) throw ConfigError("delta_bar must lie in (0,1]");
  if (!(cfg.bonus_scale >= 0.0) || !(cfg.glm_bonus_scale >= 0.0))
    throw ConfigError("bonus scales must be nonnegative");
  if (cfg.planner == PlannerKind::GridDp && !inst.map->orthogonal())
    throw ConfigError("the grid planner needs an orthogonal sum-decomposable feature map");
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct PlanResult {
  std::shared_ptr<const HistoryPolicy> policy;
  double value;  // optimistic optimum under P-hat
};

PlanResult plan(const Instance& inst, const TabularMdp& p_hat, const OptimisticReward& reward,
                const RunConfig& cfg, bool sum_decomposable, double beta_scaled) {
  if (cfg.planner == PlannerKind::Exact) {
    ExactPlan ep = exact_plan(p_hat, reward.tilde_score(sum_decomposable), cfg.enumeration_cap);
    return {std::make_shared<const TablePolicy>(std::move(ep.policy)), ep.value};
  }
  const StepScores sc = reward.step_scores();
  double zeta = sc.covering_zeta();
  if (cfg.paper_zeta) {
    const int H = inst.mdp->horizon();
    zeta = std::max({zeta, reward.w_hat().norm() * inst.map->max_norm(),
                     std::sqrt(static_cast<double>(H)) * beta_scaled, 2.0 * H});
  }
  zeta = std::max(zeta, 1e-12);
  const double eps = cfg.eps_dp > 0.0 ? cfg.eps_dp : std::cbrt(1.0 / static_cast<double>(cfg.N));
  auto gp = std::make_shared<const GridDpPolicy>(grid_dp_plan(p_hat, sc, zeta, eps, cfg.grid));
  return {gp, gp->planned_value()};
}

}  // namespace

double RegretTrace::mean_regret(std::size_t begin, std::size_t end) const {
  if (end <= begin) return 0.0;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += records[i].v_star - records[i].v_t;
  return sum / static_cast<double>(end - begin);
}

double RegretTrace::quartile_ratio() const {
  const std::size_t n = records.size();
  const std::size_t q = n / 4;
  const double first = mean_regret(0, q);
  const double last = mean_regret(n - q, n);
  return last / first;
}

double RegretTrace::optimism_frequency() const {
  std::size_t hits = 0, total = 0;
  for (const auto& r : records) {
    if (std::isnan(r.v_tilde_star)) continue;
    ++total;
    if (r.v_tilde_star >= r.v_star) ++hits;
  }
  return total ? static_cast<double>(hits) / total : kNaN;
}

double RegretTrace::elliptic_sum() const {
  double sum = 0.0;
  for (const auto& r : records)
    if (!std::isnan(r.elliptic_sq)) sum += r.elliptic_sq;
  return sum;
}

double RegretTrace::determinant_bound() const {
  std::int64_t n = 0;
  for (const auto& r : records)
    if (!std::isnan(r.elliptic_sq)) ++n;
  const double kd = kappa * d;
  return 2.0 * d * std::max(1.0, 1.0 / kappa) * std::log(1.0 + static_cast<double>(n) / kd);
}

double optimal_value(const Instance& inst, double cap) {
  return exact_plan(*inst.mdp, true_score(inst), cap).value;
}

RegretTrace run_alg1(const Instance& inst, const RunConfig& cfg) {
  validate(inst, cfg);
  const TabularMdp& env = *inst.mdp;
  const FeatureMap& map = *inst.map;
  const int d = map.dim();
  const double kap = kappa(inst.model->B(), map.max_norm());
  const double delta = cfg.delta_bar / (6.0 * static_cast<double>(cfg.N));
  const ConfidenceParams cp{d, cfg.N, delta, inst.model->B()};
  const XiParams xp{cfg.N, delta, env.num_states(), env.num_actions(), env.horizon(),
                    cfg.bonus_scale};
  const bool sd = cfg.planner == PlannerKind::GridDp;
  const double v_star = optimal_value(inst, cfg.enumeration_cap);
  const auto sequences = cfg.check_confidence
                             ? all_sequences(env.num_states(), env.num_actions(), env.horizon())
                             : std::vector<Trajectory>{};
  std::vector<Vec> seq_features;
  for (const auto& tau : sequences) seq_features.push_back(map.feature_of(tau));

  Streams rng(cfg.seed);
  RegretTrace trace;
  trace.algorithm = "alg1";
  trace.kappa = kap;
  trace.d = d;
  LabeledSet data;
  DesignMatrix dm(d, kap);
  TransitionCounts counts(env.num_states(), env.num_actions());
  const UniformPolicy uniform(env.num_actions());
  Vec w_hat = Vec::Zero(d);
  double regret = 0.0;

  for (std::int64_t t = 1; t <= cfg.N; ++t) {
    const auto start = Clock::now();
    EpisodeRecord rec;
    rec.t = t;
    w_hat = fit_w(data, d, {}, &w_hat);
    const double beta = rho_beta(cp, t).beta;
    const double coef = cfg.glm_bonus_scale * std::sqrt(kap) * beta;
    const TabularMdp p_hat = counts.empirical_mdp(env);
    const OptimisticReward reward =
        OptimisticReward::from_state(inst.map, w_hat, dm, coef, counts, xp);
    // Planned at t = 1 too, as a diagnostic of the optimistic optimum; the
    // episode itself is played uniformly.
    PlanResult pr = plan(inst, p_hat, reward, cfg, sd, cfg.glm_bonus_scale * beta);
    rec.v_tilde_star = pr.value;
    const HistoryPolicy& pi = t == 1 ? static_cast<const HistoryPolicy&>(uniform) : *pr.policy;
    rec.v_tilde = t == 1 ? exact_value(p_hat, uniform, reward.tilde_score(sd), cfg.enumeration_cap)
                         : pr.value;
    if (cfg.check_confidence)
      rec.confidence_ok =
          check_confidence_event(inst.model->w_star(), w_hat, dm, beta, kap, seq_features);

    const Trajectory tau = sample_trajectory(env, pi, rng.env);
    rec.y = inst.model->sample_label(tau, rng.label);
    const McEstimate v = evaluate(inst, pi, cfg, rng.eval);
    rec.v_t = v.mean;
    rec.v_t_se = v.std_error;
    rec.v_star = v_star;
    regret += v_star - rec.v_t;
    rec.regret_cum = regret;

    const Vec phi = map.feature_of(tau);
    rec.elliptic_sq = dm.inv_norm_sq(phi);
    data.add(phi, rec.y);
    dm.update(phi);
    counts.ingest(tau);
    if (cfg.timing) rec.ms = elapsed_ms(start);
    trace.records.push_back(rec);
    trace.trajectories.push_back(tau);
  }
  trace.final_design = dm;
  return trace;
}

RegretTrace run_alg3(const Instance& inst, const RunConfig& cfg) {
  validate(inst, cfg);
  const TabularMdp& env = *inst.mdp;
  const FeatureMap& map = *inst.map;
  if (!map.orthogonal() || map.kind() == FeatureKind::DirectTabular)
    throw ConfigError("alg3 needs an orthogonal sum-decomposable feature map");
  const int d = map.dim();
  const double kap = kappa(inst.model->B(), map.max_norm());
  const double delta = cfg.delta_bar / (12.0 * static_cast<double>(cfg.N));
  const ConfidenceParams cp{d, cfg.N, delta, inst.model->B()};
  const XiParams xp{cfg.N, delta, env.num_states(), env.num_actions(), env.horizon(),
                    cfg.bonus_scale};
  const double v_star = optimal_value(inst, cfg.enumeration_cap);

  Streams rng(cfg.seed);
  RegretTrace trace;
  trace.algorithm = "alg3";
  trace.kappa = kap;
  trace.d = d;
  LabeledSet data;
  DesignMatrix dm(d, kap);
  TransitionCounts counts(env.num_states(), env.num_actions());
  double regret = 0.0;
  std::int64_t t = 0;

  // Mixture search: every episode is real interaction and is labeled and
  // counted, but none of them enters Sigma.
  const auto explore_start = Clock::now();
  auto sink = [&](const Trajectory& tau, const HistoryPolicy& pi) {
    EpisodeRecord rec;
    rec.t = ++t;
    if (t > cfg.N)
      throw ConfigError("exploration phase exceeded the episode budget N = " +
                        std::to_string(cfg.N));
    rec.b_t = -1;
    rec.y = inst.model->sample_label(tau, rng.label);
    const McEstimate v = evaluate(inst, pi, cfg, rng.eval);
    rec.v_t = v.mean;
    rec.v_t_se = v.std_error;
    rec.v_star = v_star;
    rec.v_tilde = kNaN;
    rec.v_tilde_star = kNaN;
    rec.elliptic_sq = kNaN;
    regret += v_star - rec.v_t;
    rec.regret_cum = regret;
    data.add(map.feature_of(tau), rec.y);
    counts.ingest(tau);
    trace.records.push_back(rec);
    trace.trajectories.push_back(tau);
  };
  ExplorationOptions eo{cfg.omega, cfg.n_eul, cfg.n_eval, delta, cfg.n_max};
  Vec v1 = Vec::Zero(d);
  v1(0) = 1.0;
  const ExplorationResult ex = find_exploration_mixture(env, map, v1, eo, rng.env, sink);
  if (ex.n_exp >= cfg.N)
    throw ConfigError("exploration used " + std::to_string(ex.n_exp) +
                      " episodes, leaving none of N = " + std::to_string(cfg.N));
  if (cfg.timing && !trace.records.empty())
    trace.records.back().ms = elapsed_ms(explore_start);
  trace.n_exp = ex.n_exp;
  trace.n_loop = ex.n_loop;
  const double v_mixture_exact = enumerable(env, cfg.enumeration_cap)
                                     ? exact_value(env, ex.mixture, true_score(inst), cfg.enumeration_cap)
                                     : kNaN;
  const UniformPolicy uniform(env.num_actions());
  Vec w_hat = Vec::Zero(d);

  for (++t; t <= cfg.N; ++t) {
    const auto start = Clock::now();
    EpisodeRecord rec;
    rec.t = t;
    w_hat = fit_w(data, d, {}, &w_hat);
    const double beta = rho_beta(cp, t).beta;
    const double coef = cfg.glm_bonus_scale * std::sqrt(kap) * beta;
    const TabularMdp p_hat = counts.empirical_mdp(env);
    const OptimisticReward reward =
        OptimisticReward::from_state(inst.map, w_hat, dm, coef, counts, xp);
    const bool first = t == ex.n_exp + 1;
    PlanResult pr{nullptr, kNaN};
    if (!first) pr = plan(inst, p_hat, reward, cfg, true, cfg.glm_bonus_scale * beta);
    rec.v_tilde_star = pr.value;
    rec.v_tilde = pr.value;
    // The plan is made before the coin and discarded when the coin says explore.
    rec.b_t = bernoulli(1.0 / std::cbrt(static_cast<double>(t)), rng.coin) ? 1 : 0;
    const HistoryPolicy* pi = first ? static_cast<const HistoryPolicy*>(&uniform) : pr.policy.get();
    if (rec.b_t == 1) pi = &ex.mixture;

    const Trajectory tau = sample_trajectory(env, *pi, rng.env);
    rec.y = inst.model->sample_label(tau, rng.label);
    McEstimate v;
    if (rec.b_t == 1 && !std::isnan(v_mixture_exact))
      v = {v_mixture_exact, 0.0};
    else
      v = evaluate(inst, *pi, cfg, rng.eval);
    rec.v_t = v.mean;
    rec.v_t_se = v.std_error;
    rec.v_star = v_star;
    regret += v_star - rec.v_t;
    rec.regret_cum = regret;

    const Vec phi = map.feature_of(tau);
    rec.elliptic_sq = dm.inv_norm_sq(phi);
    data.add(phi, rec.y);
    dm.update(phi);
    counts.ingest(tau);
    if (cfg.timing) rec.ms = elapsed_ms(start);
    trace.records.push_back(rec);
    trace.trajectories.push_back(tau);
  }
  trace.final_design = dm;
  return trace;
}

DiagnosticValues diagnostics_values(const OptimisticReward& reward, const Instance& inst,
                                    const TabularMdp& p_hat, const HistoryPolicy& policy,
                                    bool sum_decomposable) {
  DiagnosticValues out{};
  out.v = exact_value(*inst.mdp, policy, true_score(inst));
  out.v_bar = exact_value(*inst.mdp, policy, reward.bar_score(sum_decomposable));
  out.v_tilde = exact_value(p_hat, policy, reward.tilde_score(sum_decomposable));
  return out;
}

bool run_coverage(const Instance& inst, std::int64_t N, double delta, std::uint64_t seed) {
  const TabularMdp& env = *inst.mdp;
  const FeatureMap& map = *inst.map;
  const int d = map.dim();
  const double kap = kappa(inst.model->B(), map.max_norm());
  const ConfidenceParams cp{d, N, delta, inst.model->B()};
  std::vector<Vec> features;
  for (const auto& tau : all_sequences(env.num_states(), env.num_actions(), env.horizon()))
    features.push_back(map.feature_of(tau));
  Streams rng(seed);
  const UniformPolicy uniform(env.num_actions());
  LabeledSet data;
  DesignMatrix dm(d, kap);
  Vec w_hat = Vec::Zero(d);
  bool ok = true;
  for (std::int64_t t = 1; t <= N; ++t) {
    w_hat = fit_w(data, d, {}, &w_hat);
    if (!check_confidence_event(inst.model->w_star(), w_hat, dm, rho_beta(cp, t).beta, kap,
                                features))
      ok = false;
    const Trajectory tau = sample_trajectory(env, uniform, rng.env);
    const Vec phi = map.feature_of(tau);
    data.add(phi, inst.model->sample_label(tau, rng.label));
    dm.update(phi);
  }
  return ok;
}

namespace {

std::string fmt(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_trace_csv(const RegretTrace& trace, std::ostream& os) {
  const bool alg3 = trace.algorithm == "alg3";
  os << "t,v_t,v_star,regret_cum,y,b_t,ms\n";
  for (const auto& r : trace.records) {
    os << r.t << ',' << fmt(r.v_t) << ',' << fmt(r.v_star) << ',' << fmt(r.regret_cum) << ','
       << r.y << ',';
    if (alg3) os << r.b_t;
    os << ',';
    if (r.ms > 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", r.ms);
      os << buf;
    }
    os << '\n';
  }
}

nlohmann::json trace_summary(const RegretTrace& trace) {
  const auto n = trace.records.size();
  nlohmann::json j;
  j["algorithm"] = trace.algorithm;
  j["episodes"] = n;
  j["final_regret"] = n ? trace.records.back().regret_cum : 0.0;
  j["quartile_ratio"] = n >= 4 ? trace.quartile_ratio() : 0.0;
  const double opt = trace.optimism_frequency();
  j["optimism_frequency"] = std::isnan(opt) ? nlohmann::json() : nlohmann::json(opt);
  j["elliptic_sum"] = trace.elliptic_sum();
  j["determinant_bound"] = trace.determinant_bound();
  j["kappa"] = trace.kappa;
  j["d"] = trace.d;
  if (trace.algorithm == "alg3") {
    j["n_exp"] = trace.n_exp;
    j["n_loop"] = trace.n_loop;
  }
  std::size_t checked = 0, held = 0;
  for (const auto& r : trace.records)
    if (r.confidence_ok >= 0) {
      ++checked;
      held += r.confidence_ok;
    }
  if (checked) j["confidence_frequency"] = static_cast<double>(held) / checked;
  return j;
}

}  // namespace epifeed
