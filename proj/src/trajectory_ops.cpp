#include "epifeed/trajectory_ops.hpp"

#include <cmath>
#include <map>
#include <string>

namespace epifeed {

bool enumerable(const TabularMdp& mdp, double cap) {
  const double sa = static_cast<double>(mdp.num_states()) * mdp.num_actions();
  return std::pow(sa, mdp.horizon()) <= cap;
}

namespace {

void require_enumerable(const TabularMdp& mdp, double cap) {
  if (!enumerable(mdp, cap))
    throw SizeError("trajectory enumeration: (|S||A|)^H exceeds cap " + std::to_string(cap));
}

void check_policy(const TabularMdp& mdp, const HistoryPolicy& policy) {
  if (policy.num_actions() != mdp.num_actions())
    throw StructuralError("policy |A| does not match the MDP");
}

Trajectory sample_with(const TabularMdp& mdp, const HistoryPolicy& policy, Rng& rng) {
  const int H = mdp.horizon();
  Trajectory tau;
  tau.reserve(H);
  std::vector<double> probs(mdp.num_actions());
  int s = sample_index(mdp.init_dist(), rng);
  for (int h = 0; h < H; ++h) {
    policy.distribution(h, s, tau, probs);
    const int a = sample_index(probs, rng);
    tau.push_back({s, a});
    if (h + 1 < H) s = sample_index(mdp.row(s, a), rng);
  }
  return tau;
}

void dfs(const TabularMdp& mdp, const HistoryPolicy& policy, Trajectory& prefix,
         int s, double prob, std::vector<std::vector<double>>& scratch,
         const std::function<void(std::span<const Step>, double)>& visit) {
  const int h = static_cast<int>(prefix.size());
  const int H = mdp.horizon();
  std::vector<double>& probs = scratch[h];
  policy.distribution(h, s, prefix, probs);
  for (int a = 0; a < mdp.num_actions(); ++a) {
    const double pa = probs[a];
    if (pa <= 0.0) continue;
    prefix.push_back({s, a});
    if (h + 1 == H) {
      visit(prefix, prob * pa);
    } else {
      const auto row = mdp.row(s, a);
      for (int s2 = 0; s2 < mdp.num_states(); ++s2) {
        if (row[s2] <= 0.0) continue;
        dfs(mdp, policy, prefix, s2, prob * pa * row[s2], scratch, visit);
      }
    }
    prefix.pop_back();
  }
}

}  // namespace

Trajectory sample_trajectory(const TabularMdp& mdp, const HistoryPolicy& policy, Rng& rng) {
  check_policy(mdp, policy);
  const std::size_t n = policy.num_components();
  if (n == 1) return sample_with(mdp, policy.component(0), rng);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = policy.component_weight(i);
  const int pick = sample_index(w, rng);
  return sample_with(mdp, policy.component(pick), rng);
}

void for_each_trajectory(const TabularMdp& mdp, const HistoryPolicy& policy,
                         const std::function<void(std::span<const Step>, double)>& visit,
                         double cap) {
  check_policy(mdp, policy);
  require_enumerable(mdp, cap);
  std::vector<std::vector<double>> scratch(mdp.horizon(),
                                           std::vector<double>(mdp.num_actions()));
  Trajectory prefix;
  prefix.reserve(mdp.horizon());
  const auto rho = mdp.init_dist();
  for (std::size_t c = 0; c < policy.num_components(); ++c) {
    const double wc = policy.component_weight(c);
    if (wc <= 0.0) continue;
    const HistoryPolicy& comp = policy.component(c);
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (rho[s] <= 0.0) continue;
      dfs(mdp, comp, prefix, s, wc * rho[s], scratch, visit);
    }
  }
}

std::vector<std::pair<Trajectory, double>> enumerate_trajectory_dist(
    const TabularMdp& mdp, const HistoryPolicy& policy, double cap) {
  std::map<std::uint64_t, std::pair<Trajectory, double>> merged;
  for_each_trajectory(
      mdp, policy,
      [&](std::span<const Step> tau, double p) {
        const auto code = prefix_code(tau, mdp.num_states(), mdp.num_actions());
        auto [it, inserted] = merged.try_emplace(code, Trajectory(tau.begin(), tau.end()), 0.0);
        it->second.second += p;
      },
      cap);
  std::vector<std::pair<Trajectory, double>> out;
  out.reserve(merged.size());
  for (auto& [code, entry] : merged) out.push_back(std::move(entry));
  return out;
}

double exact_value(const TabularMdp& mdp, const HistoryPolicy& policy,
                   const TrajectoryScore& score, double cap) {
  double value = 0.0;
  for_each_trajectory(
      mdp, policy, [&](std::span<const Step> tau, double p) { value += p * score(tau); }, cap);
  return value;
}

McEstimate monte_carlo_value(const TabularMdp& mdp, const HistoryPolicy& policy,
                             const TrajectoryScore& score, int samples, Rng& rng) {
  if (samples < 2) throw DomainError("monte_carlo_value: need at least two samples");
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = score(sample_trajectory(mdp, policy, rng));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, (sum_sq - samples * mean * mean) / (samples - 1));
  return {mean, std::sqrt(var / samples)};
}

std::vector<Trajectory> all_sequences(int num_states, int num_actions, int horizon, double cap) {
  const int sa = num_states * num_actions;
  if (std::pow(static_cast<double>(sa), horizon) > cap)
    throw SizeError("all_sequences: (|S||A|)^H exceeds cap");
  std::vector<Trajectory> out;
  Trajectory tau(horizon);
  std::vector<int> idx(horizon, 0);
  while (true) {
    for (int h = 0; h < horizon; ++h) tau[h] = {idx[h] / num_actions, idx[h] % num_actions};
    out.push_back(tau);
    int h = horizon - 1;
    while (h >= 0 && ++idx[h] == sa) idx[h--] = 0;
    if (h < 0) break;
  }
  return out;
}

}  // namespace epifeed
