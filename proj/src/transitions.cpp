#include "epifeed/transitions.hpp"

#include <algorithm>
#include <cmath>

namespace epifeed {

double xi_bonus(std::int64_t n, const XiParams& p) {
  if (!(p.delta > 0.0 && p.delta <= 1.0)) throw DomainError("xi: delta must be in (0,1]");
  if (n <= 0) return 2.0;
  const double S = p.num_states, A = p.num_actions, H = p.horizon;
  const double N = static_cast<double>(p.N);
  const double nn = static_cast<double>(n);
  // log of the argument, assembled in log space to avoid overflow of (|S||A|H)^H.
  const double log_arg = std::log(6.0) + H * std::log(S * A * H) +
                         S * std::log(8.0 * N * H * H) +
                         std::log(std::max(std::log(nn), 1.0)) - std::log(p.delta);
  return std::min(2.0, p.bonus_scale * 4.0 * std::sqrt(log_arg / nn));
}

TransitionCounts::TransitionCounts(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      n_sa_(static_cast<std::size_t>(num_states) * num_actions, 0),
      n_sas_(static_cast<std::size_t>(num_states) * num_actions * num_states, 0) {
  if (num_states < 1 || num_actions < 1)
    throw StructuralError("TransitionCounts: dimensions must be positive");
}

void TransitionCounts::ingest(std::span<const Step> tau) {
  for (const Step& st : tau)
    if (st.state < 0 || st.state >= num_states_ || st.action < 0 || st.action >= num_actions_)
      throw StructuralError("TransitionCounts: index out of range");
  for (std::size_t h = 0; h + 1 < tau.size(); ++h) {
    const auto k = index(tau[h].state, tau[h].action);
    ++n_sa_[k];
    ++n_sas_[k * num_states_ + tau[h + 1].state];
  }
}

std::vector<double> TransitionCounts::p_hat(int s, int a) const {
  std::vector<double> row(num_states_, 1.0 / num_states_);
  const auto n = visits(s, a);
  if (n == 0) return row;
  const double inv = 1.0 / static_cast<double>(n);
  for (int s2 = 0; s2 < num_states_; ++s2)
    row[s2] = static_cast<double>(visits(s, a, s2)) * inv;
  return row;
}

std::vector<double> TransitionCounts::p_hat_tensor() const {
  std::vector<double> out;
  out.reserve(n_sas_.size());
  for (int s = 0; s < num_states_; ++s)
    for (int a = 0; a < num_actions_; ++a) {
      auto row = p_hat(s, a);
      // renormalize so the row passes the 1e-12 simplex check exactly
      double sum = 0.0;
      for (double x : row) sum += x;
      for (double x : row) out.push_back(x / sum);
    }
  return out;
}

TabularMdp TransitionCounts::empirical_mdp(const TabularMdp& shape) const {
  if (shape.num_states() != num_states_ || shape.num_actions() != num_actions_)
    throw StructuralError("TransitionCounts::empirical_mdp: shape mismatch");
  return shape.with_transitions(p_hat_tensor());
}

nlohmann::json TransitionCounts::to_json() const {
  return {{"num_states", num_states_},
          {"num_actions", num_actions_},
          {"n_sa", n_sa_},
          {"n_sas", n_sas_}};
}

TransitionCounts TransitionCounts::from_json(const nlohmann::json& j) {
  TransitionCounts c(j.at("num_states").get<int>(), j.at("num_actions").get<int>());
  auto n_sa = j.at("n_sa").get<std::vector<std::int64_t>>();
  auto n_sas = j.at("n_sas").get<std::vector<std::int64_t>>();
  if (n_sa.size() != c.n_sa_.size() || n_sas.size() != c.n_sas_.size())
    throw StructuralError("TransitionCounts::from_json: size mismatch");
  c.n_sa_ = std::move(n_sa);
  c.n_sas_ = std::move(n_sas);
  for (std::size_t k = 0; k < c.n_sa_.size(); ++k) {
    std::int64_t sum = 0;
    for (int s2 = 0; s2 < c.num_states_; ++s2) sum += c.n_sas_[k * c.num_states_ + s2];
    if (sum != c.n_sa_[k]) throw StructuralError("TransitionCounts::from_json: inconsistent counts");
  }
  return c;
}

}  // namespace epifeed
