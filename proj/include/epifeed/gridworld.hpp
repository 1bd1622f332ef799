#pragma once

#include "epifeed/common.hpp"

#include <array>
#include <vector>

namespace epifeed {

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridCell {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Goal-conditioned grid: random start and goal each episode, four moves,
/// moves off the grid leave the agent in place. One binary label at the end
/// of the episode.
class GoalGridEnv {
 public:
  GoalGridEnv(int width = 15, int height = 10, int horizon = 30, bool any_of_last3 = false);

  int width() const { return width_; }
  int height() const { return height_; }
  int horizon() const { return horizon_; }
  bool any_of_last3() const { return any_of_last3_; }

  GridCell random_cell(Rng& rng) const;
  GridCell move(GridCell c, int action) const;
  /// (x, y, goal x, goal y), each scaled to [0, 1]
  std::array<double, 4> observe(GridCell pos, GridCell goal) const;
  /// goal cell or one of its 4-neighbours
  bool in_region(GridCell pos, GridCell goal) const;
  /// positions[h] is the position after the move of step h (h = 0..H-1).
  /// Label 1 iff the last three positions are all in the success region (or
  /// any of them, under the alternative reading).
  int episode_reward(const std::vector<GridCell>& positions, GridCell goal) const;

 private:
  int width_;
  int height_;
  int horizon_;
  bool any_of_last3_;
};

}  // namespace epifeed
