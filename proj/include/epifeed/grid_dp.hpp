#pragma once

#include "epifeed/mdp.hpp"
#include "epifeed/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

namespace epifeed {

/// Uniform partition of [-zeta, zeta] into m = ceil(12 H^2 zeta / eps)
/// intervals of width eps / (6 H^2). Indices are 0-based here (the interval
/// containing x is index(x); its center is center(index(x))). Values outside
/// [-zeta, zeta] are clamped to the end intervals.
class HistoryGrid {
 public:
  HistoryGrid(double zeta, double eps, int horizon);

  double zeta() const { return zeta_; }
  double eps() const { return eps_; }
  int horizon() const { return horizon_; }
  std::int64_t size() const { return m_; }
  double width() const { return width_; }
  double center(std::int64_t j) const { return -zeta_ + (static_cast<double>(j) + 0.5) * width_; }
  std::int64_t index(double x) const;

 private:
  double zeta_;
  double eps_;
  int horizon_;
  double width_;
  std::int64_t m_;
};

/// Per-step score tables in [h][s][a] order: w_h (logit increments), v_h
/// (in-clip bonus increments), b_h (additive bonus increments).
struct StepScores {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> w, v, b;

  StepScores(int horizon, int num_states, int num_actions);
  std::size_t offset(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  /// min{mu(sum w) + sum v, 1} + sum b
  double score(std::span<const Step> tau) const;
  /// Smallest zeta covering |sum w|, sum v and sum b on every sequence, from
  /// per-step extremes.
  double covering_zeta() const;
};

enum class GridDpMode {
  Dense,   // every (h, s, i, j, k) cell
  Sparse,  // only cells reachable from queries made by some (s,a) prefix
  Auto,    // dense when it fits the memory budget
};

struct GridDpOptions {
  GridDpMode mode = GridDpMode::Auto;
  bool parallel = true;  // dense mode: OpenMP sweep instead of the serial reference
  std::size_t memory_budget_bytes = std::size_t{1} << 29;
  double prefix_cap = 1e6;  // sparse mode: cap on enumerated prefixes
};

/// History-dependent deterministic policy read from the action tensors:
/// at step h with prefix tau_{h-1} it plays
/// a_h(s, index(sum w), index(sum v), index(sum b)).
class GridDpPolicy final : public HistoryPolicy {
 public:
  int num_actions() const override { return scores_.num_actions; }
  void distribution(int h, int s, std::span<const Step> prefix,
                    std::span<double> out) const override;
  int act(int h, int s, std::span<const Step> prefix) const;

  const HistoryGrid& grid() const { return grid_; }
  const StepScores& scores() const { return scores_; }
  bool dense() const { return dense_; }
  /// sum_s rho(s) V_1(s, index(0), index(0), index(0))
  double planned_value() const { return planned_value_; }
  std::size_t cells_filled() const;

  /// Tensor entries; throws StructuralError for a cell the sparse fill never
  /// touched.
  double value_at(int h, int s, std::int64_t i, std::int64_t j, std::int64_t k) const;
  int action_at(int h, int s, std::int64_t i, std::int64_t j, std::int64_t k) const;

  /// Dense mode only. Little-endian layout: three uint64 {H, |S|, m}, then
  /// V as float64 [h][s][i][j][k], then the actions as uint8 in the same order.
  void write_tensors(const std::filesystem::path& path) const;

 private:
  friend GridDpPolicy grid_dp_plan(const TabularMdp&, const StepScores&, double, double,
                                   const GridDpOptions&);
  struct Key {
    std::int32_t h, s;
    std::int64_t i, j, k;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& key) const noexcept;
  };
  struct Cell {
    double value;
    std::int32_t action;
  };

  GridDpPolicy(HistoryGrid grid, StepScores scores) : grid_(grid), scores_(std::move(scores)) {}
  std::size_t dense_index(int s, std::int64_t i, std::int64_t j, std::int64_t k) const;
  const Cell& sparse_cell(int h, int s, std::int64_t i, std::int64_t j, std::int64_t k) const;

  HistoryGrid grid_;
  StepScores scores_;
  bool dense_ = true;
  double planned_value_ = 0.0;
  std::vector<std::vector<double>> values_;          // dense: [h] -> S*m^3
  std::vector<std::vector<std::uint8_t>> actions_;   // dense: [h] -> S*m^3
  std::unordered_map<Key, Cell, KeyHash> cells_;     // sparse
};

/// Quantized-history dynamic program for scores of the form
/// min{mu(sum_h w_h) + sum_h v_h, 1} + sum_h b_h under kernel P-bar.
/// Dense mode costs O(H |S|^2 |A| m^3) time and O(H |S| m^3) memory and
/// throws SizeError when that exceeds the budget.
GridDpPolicy grid_dp_plan(const TabularMdp& kernel, const StepScores& scores, double zeta,
                          double eps, const GridDpOptions& opts = {});

/// Bytes the dense tensors would need.
double grid_dp_dense_bytes(int horizon, int num_states, std::int64_t m);

}  // namespace epifeed
