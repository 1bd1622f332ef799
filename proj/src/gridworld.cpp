#include "epifeed/gridworld.hpp"

#include <cstdlib>
#include <string>

namespace epifeed {

GoalGridEnv::GoalGridEnv(int width, int height, int horizon, bool any_of_last3)
    : width_(width), height_(height), horizon_(horizon), any_of_last3_(any_of_last3) {
  if (width < 2 || height < 2) throw DomainError("GoalGridEnv: grid must be at least 2x2");
  if (horizon < 3) throw DomainError("GoalGridEnv: horizon must be at least 3");
}

GridCell GoalGridEnv::random_cell(Rng& rng) const {
  const int k = static_cast<int>(uniform01(rng) * width_ * height_);
  return {k % width_, k / width_};
}

GridCell GoalGridEnv::move(GridCell c, int action) const {
  GridCell n = c;
  switch (action) {
    case kUp: ++n.y; break;
    case kDown: --n.y; break;
    case kLeft: --n.x; break;
    case kRight: ++n.x; break;
    default: throw DomainError("GoalGridEnv: invalid action " + std::to_string(action));
  }
  if (n.x < 0 || n.x >= width_ || n.y < 0 || n.y >= height_) return c;
  return n;
}

std::array<double, 4> GoalGridEnv::observe(GridCell pos, GridCell goal) const {
  const double sx = 1.0 / (width_ - 1), sy = 1.0 / (height_ - 1);
  return {pos.x * sx, pos.y * sy, goal.x * sx, goal.y * sy};
}

bool GoalGridEnv::in_region(GridCell pos, GridCell goal) const {
  return std::abs(pos.x - goal.x) + std::abs(pos.y - goal.y) <= 1;
}

int GoalGridEnv::episode_reward(const std::vector<GridCell>& positions, GridCell goal) const {
  if (static_cast<int>(positions.size()) != horizon_)
    throw StructuralError("episode_reward: expected one position per step");
  int hits = 0;
  for (int h = horizon_ - 3; h < horizon_; ++h) hits += in_region(positions[h], goal) ? 1 : 0;
  return any_of_last3_ ? (hits > 0 ? 1 : 0) : (hits == 3 ? 1 : 0);
}

}  // namespace epifeed
