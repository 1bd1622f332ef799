#include "epifeed/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace epifeed {

namespace {
constexpr double kNormSlack = 1e-9;
constexpr double kOrthoTol = 1e-12;
constexpr double kEnumerationCap = 1e6;
}  // namespace

FeatureMap FeatureMap::direct(int num_states, int num_actions, int horizon,
                              bool normalize) {
  if (num_states < 1 || num_actions < 1 || horizon < 1)
    throw StructuralError("FeatureMap::direct: dimensions must be positive");
  FeatureMap fm;
  fm.kind_ = FeatureKind::DirectTabular;
  fm.num_states_ = num_states;
  fm.num_actions_ = num_actions;
  fm.horizon_ = horizon;
  fm.dim_ = num_states * num_actions * horizon;
  fm.scale_ = normalize ? 1.0 / std::sqrt(static_cast<double>(horizon)) : 1.0;
  fm.orthogonal_ = true;
  fm.max_norm_ = fm.scale_ * std::sqrt(static_cast<double>(horizon));
  // The unnormalized map deliberately violates the unit-norm bound; it is
  // exposed for comparison only, so no norm check here.
  return fm;
}

FeatureMap FeatureMap::sum_decomposable(int num_states, int num_actions,
                                        int horizon, std::vector<Vec> tables,
                                        bool orthogonal) {
  FeatureMap fm;
  fm.kind_ = FeatureKind::SumDecomposable;
  fm.num_states_ = num_states;
  fm.num_actions_ = num_actions;
  fm.horizon_ = horizon;
  fm.tables_ = std::move(tables);
  fm.finalize(orthogonal);
  return fm;
}

FeatureMap FeatureMap::custom(int num_states, int num_actions, int horizon,
                              std::vector<Vec> tables) {
  FeatureMap fm;
  fm.kind_ = FeatureKind::CustomTable;
  fm.num_states_ = num_states;
  fm.num_actions_ = num_actions;
  fm.horizon_ = horizon;
  fm.tables_ = std::move(tables);
  fm.finalize(false);
  return fm;
}

void FeatureMap::finalize(bool claim_orthogonal) {
  if (num_states_ < 1 || num_actions_ < 1 || horizon_ < 1)
    throw StructuralError("FeatureMap: dimensions must be positive");
  const auto cells = static_cast<std::size_t>(horizon_) * num_states_ * num_actions_;
  if (tables_.size() != cells)
    throw StructuralError("FeatureMap: expected " + std::to_string(cells) +
                          " per-step vectors, got " + std::to_string(tables_.size()));
  dim_ = static_cast<int>(tables_.front().size());
  if (dim_ < 1) throw StructuralError("FeatureMap: zero feature dimension");
  for (const Vec& v : tables_)
    if (v.size() != dim_) throw StructuralError("FeatureMap: ragged per-step tables");

  const int sa = num_states_ * num_actions_;
  auto at = [&](int h, int k) -> const Vec& { return tables_[static_cast<std::size_t>(h) * sa + k]; };

  bool ortho = true;
  for (int h = 0; h < horizon_ && ortho; ++h)
    for (int h2 = h + 1; h2 < horizon_ && ortho; ++h2)
      for (int k = 0; k < sa && ortho; ++k)
        for (int k2 = 0; k2 < sa && ortho; ++k2)
          if (std::abs(at(h, k).dot(at(h2, k2))) > kOrthoTol) ortho = false;
  if (claim_orthogonal && !ortho)
    throw StructuralError("FeatureMap: per-step blocks are not orthogonal");
  orthogonal_ = ortho;

  std::vector<double> step_max(horizon_, 0.0);
  for (int h = 0; h < horizon_; ++h)
    for (int k = 0; k < sa; ++k) step_max[h] = std::max(step_max[h], at(h, k).norm());

  if (ortho) {
    double sq = 0.0;
    for (double m : step_max) sq += m * m;
    max_norm_ = std::sqrt(sq);
  } else {
    double triangle = 0.0;
    for (double m : step_max) triangle += m;
    max_norm_ = triangle;
    if (triangle > 1.0 + kNormSlack) {
      // Fall back to the exact maximum over all (s,a) sequences.
      if (std::pow(static_cast<double>(sa), horizon_) > kEnumerationCap)
        throw SizeError("FeatureMap: cannot certify ||phi|| <= 1 (too many sequences)");
      double best = 0.0;
      std::vector<int> idx(horizon_, 0);
      Vec acc(dim_);
      while (true) {
        acc.setZero();
        for (int h = 0; h < horizon_; ++h) acc += at(h, idx[h]);
        best = std::max(best, acc.norm());
        int h = 0;
        while (h < horizon_ && ++idx[h] == sa) idx[h++] = 0;
        if (h == horizon_) break;
      }
      max_norm_ = best;
    }
  }
  if (max_norm_ > 1.0 + kNormSlack)
    throw StructuralError("FeatureMap: some trajectory has ||phi||_2 = " +
                          std::to_string(max_norm_) + " > 1");
}

void FeatureMap::check_index(int h, int s, int a) const {
  if (h < 0 || h >= horizon_ || s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
    throw StructuralError("FeatureMap: index out of range");
}

Vec FeatureMap::step_feature(int h, int s, int a) const {
  Vec v = Vec::Zero(dim_);
  add_step_feature(h, s, a, v);
  return v;
}

void FeatureMap::add_step_feature(int h, int s, int a, Vec& acc) const {
  check_index(h, s, a);
  if (kind_ == FeatureKind::DirectTabular) {
    acc[(h * num_states_ + s) * num_actions_ + a] += scale_;
  } else {
    acc += tables_[(static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a];
  }
}

Vec FeatureMap::feature_of(std::span<const Step> tau) const {
  if (tau.size() != static_cast<std::size_t>(horizon_))
    throw StructuralError("FeatureMap::feature_of: trajectory length mismatch");
  Vec phi = Vec::Zero(dim_);
  for (int h = 0; h < horizon_; ++h) add_step_feature(h, tau[h].state, tau[h].action, phi);
  return phi;
}

}  // namespace epifeed
