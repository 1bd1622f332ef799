#include "epifeed/glm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstring>

namespace epifeed {

void LabeledSet::add(const Vec& phi, int y) {
  if (y != 0 && y != 1) throw DomainError("LabeledSet: label must be 0 or 1");
  if (!rows_.empty() && phi.size() != rows_.front().phi.size())
    throw StructuralError("LabeledSet: feature dimension mismatch");
  if (phi.norm() > 1.0 + 1e-9) throw DomainError("LabeledSet: feature norm exceeds 1");
  std::string key(reinterpret_cast<const char*>(phi.data()),
                  static_cast<std::size_t>(phi.size()) * sizeof(double));
  auto [it, inserted] = index_.try_emplace(std::move(key), rows_.size());
  if (inserted) rows_.push_back({phi, 0.0, 0.0});
  Row& row = rows_[it->second];
  row.count += 1.0;
  row.positives += y;
  ++size_;
}

double glm_loss(const LabeledSet& data, const Vec& w) {
  double loss = 0.5 * w.squaredNorm();
  for (const auto& row : data.rows()) {
    const double z = w.dot(row.phi);
    loss += row.count * softplus(z) - row.positives * z;
  }
  return loss;
}

Vec glm_gradient(const LabeledSet& data, const Vec& w) {
  Vec g = w;
  for (const auto& row : data.rows()) {
    const double z = w.dot(row.phi);
    g += (row.count * mu(z) - row.positives) * row.phi;
  }
  return g;
}

Vec fit_w(const LabeledSet& data, int dim, const FitOptions& opts, const Vec* warm_start) {
  if (!(opts.tol > 0.0)) throw DomainError("fit_w: tol must be positive");
  if (data.size() > 0) dim = data.dim();
  if (data.size() == 0) return Vec::Zero(dim);

  Vec w = (warm_start && warm_start->size() == dim) ? *warm_start : Vec::Zero(dim);
  Vec g = glm_gradient(data, w);
  double loss = glm_loss(data, w);
  constexpr double kArmijo = 1e-4;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (g.norm() <= opts.tol) return w;
    Mat hess = Mat::Identity(dim, dim);
    for (const auto& row : data.rows())
      hess.selfadjointView<Eigen::Lower>().rankUpdate(row.phi,
                                                      row.count * mu_prime(w.dot(row.phi)));
    const Vec dir = -hess.selfadjointView<Eigen::Lower>().llt().solve(g);
    const double slope = g.dot(dir);

    Vec trial = w + dir;
    double trial_loss = glm_loss(data, trial);
    Vec trial_g;
    const double resolution =
        64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss));
    if (-slope <= resolution) {
      // The predicted decrease is below the rounding of the loss, so the
      // Armijo test is meaningless; keep the Newton step if it shrinks g.
      trial_g = glm_gradient(data, trial);
      if (trial_g.norm() >= g.norm())
        throw ConvergenceError("fit_w: stalled at rounding level", g.norm());
    } else {
      double step = 1.0;
      int halvings = 0;
      while (trial_loss > loss + kArmijo * step * slope && halvings < 60) {
        step *= 0.5;
        trial = w + step * dir;
        trial_loss = glm_loss(data, trial);
        ++halvings;
      }
      if (halvings == 60) throw ConvergenceError("fit_w: line search stalled", g.norm());
      trial_g = glm_gradient(data, trial);
    }
    w = std::move(trial);
    g = std::move(trial_g);
    loss = trial_loss;
  }
  if (g.norm() <= opts.tol) return w;
  char msg[96];
  std::snprintf(msg, sizeof msg, "fit_w: max_iter exceeded, gradient norm %.3e", g.norm());
  throw ConvergenceError(msg, g.norm());
}

DesignMatrix::DesignMatrix(int dim, double kappa)
    : sigma_(kappa * Mat::Identity(dim, dim)),
      inverse_(Mat::Identity(dim, dim) / kappa),
      kappa_(kappa) {
  if (dim < 1 || !(kappa > 0.0)) throw DomainError("DesignMatrix: need dim >= 1 and kappa > 0");
}

void DesignMatrix::update(const Vec& phi) {
  if (phi.size() != sigma_.rows()) throw StructuralError("DesignMatrix: dimension mismatch");
  sigma_.noalias() += phi * phi.transpose();
  ++count_;
  if (count_ % kRefactorEvery == 0) {
    inverse_ = sigma_.llt().solve(Mat::Identity(dim(), dim()));
    inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
    return;
  }
  const Vec u = inverse_ * phi;
  const double denom = 1.0 + phi.dot(u);
  inverse_.noalias() -= (u * u.transpose()) / denom;
}

nlohmann::json DesignMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < sigma_.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (int j = 0; j < sigma_.cols(); ++j) r.push_back(sigma_(i, j));
    rows.push_back(std::move(r));
  }
  return {{"kappa", kappa_}, {"count", count_}, {"sigma", rows}};
}

ConfidenceRadius rho_beta(const ConfidenceParams& cp, std::int64_t t) {
  if (!(cp.delta > 0.0 && cp.delta <= 1.0)) throw DomainError("rho_beta: delta must be in (0,1]");
  if (cp.N < 1 || t < 1 || t > cp.N) throw DomainError("rho_beta: need 1 <= t <= N");
  const double d = cp.d;
  const double rho = d * std::log(4.0 + 4.0 * static_cast<double>(t) / d) +
                     2.0 * std::log(static_cast<double>(cp.N) / cp.delta) + 0.5;
  const double beta = std::pow(1.0 + cp.B + rho * (std::sqrt(1.0 + cp.B) + rho), 1.5);
  return {rho, beta};
}

double bonus_traj(const DesignMatrix& dm, double beta, double kappa, const Vec& phi) {
  return std::sqrt(kappa) * beta * dm.inv_norm(phi);
}

double bonus_sd(const DesignMatrix& dm, double beta, double kappa,
                std::span<const Vec> step_features) {
  double sum = 0.0;
  for (const Vec& f : step_features) sum += dm.inv_norm(f);
  return std::sqrt(kappa) * beta * sum;
}

double bar_mu(const Vec& w_hat, const Vec& phi, double bonus) {
  return std::min(mu(w_hat.dot(phi)) + bonus, 1.0);
}

bool check_confidence_event(const Vec& w_star, const Vec& w_hat, const DesignMatrix& dm,
                            double beta, double kappa, std::span<const Vec> features) {
  for (const Vec& phi : features) {
    const double gap = std::abs(mu(w_star.dot(phi)) - mu(w_hat.dot(phi)));
    if (gap > bonus_traj(dm, beta, kappa, phi)) return false;
  }
  return true;
}

nlohmann::json estimator_snapshot(std::int64_t t, const Vec& w_hat, const DesignMatrix& dm) {
  return {{"t", t},
          {"w_hat", std::vector<double>(w_hat.data(), w_hat.data() + w_hat.size())},
          {"design", dm.to_json()}};
}

}  // namespace epifeed
