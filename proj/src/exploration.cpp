#include "epifeed/exploration.hpp"

#include "epifeed/sym_eig.hpp"
#include "epifeed/trajectory_ops.hpp"
#include "epifeed/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace epifeed {

namespace {

void check_reward(const TabularMdp& mdp, const StepReward& r) {
  const auto n = static_cast<std::size_t>(mdp.horizon()) * mdp.num_states() * mdp.num_actions();
  if (r.size() != n) throw StructuralError("step reward table has the wrong size");
}

// Greedy backward induction on `kernel`. With `unit_bonus` = sqrt(L / n) per
// (s, a), step h adds a Hoeffding bonus whose range is the span of the next
// value, capped at the worst case 2(H - h); V_h is then clipped above at H - h.
MarkovPolicy greedy_policy(const TabularMdp& kernel, const StepReward& r,
                           const std::vector<double>* unit_bonus, double* value) {
  const int H = kernel.horizon(), S = kernel.num_states(), A = kernel.num_actions();
  std::vector<double> next(S, 0.0), cur(S);
  std::vector<int> actions(static_cast<std::size_t>(H) * S);
  for (int h = H - 1; h >= 0; --h) {
    const auto [lo, hi] = std::minmax_element(next.begin(), next.end());
    const double range = std::min(2.0 * (H - h), *hi - *lo);
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const auto o = (static_cast<std::size_t>(h) * S + s) * A + a;
        double q = r[o] + (unit_bonus ? range * (*unit_bonus)[s * A + a] : 0.0);
        if (h + 1 < H) {
          const auto row = kernel.row(s, a);
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * next[s2];
        }
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      cur[s] = unit_bonus ? std::min(best, static_cast<double>(H - h)) : best;
      actions[static_cast<std::size_t>(h) * S + s] = best_a;
    }
    std::swap(cur, next);
  }
  if (value) {
    double v = 0.0;
    for (int s = 0; s < S; ++s) v += kernel.init_dist()[s] * next[s];
    *value = v;
  }
  return MarkovPolicy::deterministic(H, S, A, actions);
}

}  // namespace

double markov_value(const TabularMdp& mdp, const MarkovPolicy& policy, const StepReward& r) {
  check_reward(mdp, r);
  const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  std::vector<double> next(S, 0.0), cur(S);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        const double pa = policy.prob(h, s, a);
        if (pa == 0.0) continue;
        double q = r[(static_cast<std::size_t>(h) * S + s) * A + a];
        if (h + 1 < H) {
          const auto row = mdp.row(s, a);
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * next[s2];
        }
        v += pa * q;
      }
      cur[s] = v;
    }
    std::swap(cur, next);
  }
  double v = 0.0;
  for (int s = 0; s < S; ++s) v += mdp.init_dist()[s] * next[s];
  return v;
}

MarkovOptimum markov_optimum(const TabularMdp& mdp, const StepReward& r) {
  check_reward(mdp, r);
  double value = 0.0;
  MarkovPolicy policy = greedy_policy(mdp, r, nullptr, &value);
  return {std::move(policy), value};
}

MixturePolicy markov_optimistic_rl(const TabularMdp& env, const StepReward& r, int episodes,
                                   double delta, Rng& rng, const EpisodeSink& sink) {
  check_reward(env, r);
  if (episodes < 1) throw DomainError("markov_optimistic_rl: need at least one episode");
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("markov_optimistic_rl: delta in (0,1]");
  for (double x : r)
    if (!(std::abs(x) <= 1.0 + 1e-12)) throw DomainError("markov_optimistic_rl: reward outside [-1,1]");
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions();
  const double log_term =
      std::log(2.0 * S * A * H * static_cast<double>(episodes) / delta);
  TransitionCounts counts(S, A);
  std::vector<double> unit(static_cast<std::size_t>(S) * A);
  std::vector<std::shared_ptr<const MarkovPolicy>> members;
  members.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double n = std::max<double>(1.0, static_cast<double>(counts.visits(s, a)));
        unit[static_cast<std::size_t>(s) * A + a] = std::sqrt(log_term / n);
      }
    const TabularMdp p_hat = counts.empirical_mdp(env);
    auto pi = std::make_shared<const MarkovPolicy>(greedy_policy(p_hat, r, &unit, nullptr));
    const Trajectory tau = sample_trajectory(env, *pi, rng);
    if (sink) sink(tau, *pi);
    counts.ingest(tau);
    members.push_back(std::move(pi));
  }
  return MixturePolicy(std::move(members));
}

ExplorationResult find_exploration_mixture(const TabularMdp& env, const FeatureMap& map,
                                           const Vec& v1, const ExplorationOptions& opts,
                                           Rng& rng, const EpisodeSink& sink) {
  if (!map.orthogonal() || map.kind() == FeatureKind::DirectTabular)
    throw StructuralError("find_exploration_mixture: needs an orthogonal per-step table map");
  if (map.num_states() != env.num_states() || map.num_actions() != env.num_actions() ||
      map.horizon() != env.horizon())
    throw StructuralError("find_exploration_mixture: map and environment disagree on shape");
  if (!(opts.omega > 0.0 && opts.omega < 1.0)) throw DomainError("omega must lie in (0,1)");
  if (opts.n_eul < 1 || opts.n_eval < 1 || opts.n_max < 1)
    throw DomainError("find_exploration_mixture: episode counts must be positive");
  const int d = map.dim();
  if (v1.size() != d || std::abs(v1.norm() - 1.0) > 1e-9)
    throw DomainError("find_exploration_mixture: v1 must be a unit vector of dimension d");
  const int H = env.horizon(), S = env.num_states(), A = env.num_actions();
  const double w2 = opts.omega * opts.omega;

  ExplorationResult out{MixturePolicy({std::make_shared<const MarkovPolicy>(
                            MarkovPolicy::deterministic(H, S, A, std::vector<int>(H * S, 0)))}),
                        0, 0, w2 / 16.0, Mat::Identity(d, d) * (w2 / 16.0), {}, {}};
  std::vector<MixturePolicy> parts;
  Vec v = v1;
  while (out.lambda_min < w2 / 8.0) {
    if (out.n_loop == opts.n_max)
      throw TerminationError("find_exploration_mixture: no termination after " +
                                 std::to_string(opts.n_max) + " rounds; omega may be too large",
                             out.lambda_min);
    ++out.n_loop;
    out.directions.push_back(v);
    StepReward r(static_cast<std::size_t>(H) * S * A);
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          r[(static_cast<std::size_t>(h) * S + s) * A + a] = v.dot(map.step_feature(h, s, a));
    MixturePolicy u = markov_optimistic_rl(env, r, opts.n_eul, opts.delta, rng, sink);
    Vec a_hat = Vec::Zero(d);
    for (int t = 0; t < opts.n_eval; ++t) {
      const Trajectory tau = sample_trajectory(env, u, rng);
      if (sink) sink(tau, u);
      a_hat += map.feature_of(tau);
    }
    a_hat /= static_cast<double>(opts.n_eval);
    out.a_matrix += a_hat * a_hat.transpose();
    out.a_hats.push_back(a_hat);
    parts.push_back(std::move(u));
    const SymEig eig = symmetric_eig(out.a_matrix);
    out.lambda_min = eig.values(0);
    v = eig.vectors.col(0);
  }
  out.mixture = MixturePolicy::uniform_over(parts);
  out.n_exp = static_cast<std::int64_t>(out.n_loop) * (opts.n_eul + opts.n_eval);
  return out;
}

ExplorationConstants exploration_constants(int S, int A, int H, int d, std::int64_t N,
                                           double delta, double omega) {
  const double w2 = omega * omega;
  const double n = static_cast<double>(N);
  ExplorationConstants c{};
  c.n_eul = static_cast<double>(S) * S * A * H * H * std::log(S * A * n * n * d / (delta * w2)) / w2;
  const double l = std::log(n * d * d / (delta * w2));
  c.n_eval = static_cast<double>(d) * d * d * l * l * l / (w2 * w2);
  const double inner = d * std::log(1.0 + 16.0 * n / (d * w2));
  c.n_exp_bar = inner / std::log(1.5) * (c.n_eul + c.n_eval);
  c.covariance_floor = w2 * std::log(1.5) / (32.0 * d * std::log(inner));
  return c;
}

nlohmann::json mixture_to_json(const MixturePolicy& mixture) {
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < mixture.members().size(); ++i) {
    const auto& m = *mixture.members()[i];
    members.push_back({{"weight", mixture.weights()[i]},
                       {"horizon", m.horizon()},
                       {"num_states", m.num_states()},
                       {"num_actions", m.num_actions()},
                       {"probs", m.table()}});
  }
  return {{"members", members}};
}

}  // namespace epifeed
