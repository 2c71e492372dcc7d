#pragma once

#include <string>
#include <vector>

#include "odrl/mdp.hpp"

namespace odrl {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Cells reached by a slip draw.
enum class SlipNeighborhood {
  moore,        // 3x3 block including the current cell
  von_neumann,  // current cell plus its four edge neighbours
};

/// Actions in index order. y grows downward, so `up` decrements y.
enum class GridAction : int { up = 0, down = 1, left = 2, right = 3 };
inline constexpr int kGridActions = 4;

struct GridSpec {
  int width = 8;
  int height = 8;
  std::vector<Cell> blocked_cells;
  double slip_prob = 0.1;
  SlipNeighborhood neighborhood = SlipNeighborhood::moore;
  Cell start_cell{0, 0};
  Cell goal_cell{7, 7};
};

/// A built grid world: the tabular MDP plus the cell <-> state bookkeeping.
class GridWorld {
 public:
  explicit GridWorld(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  const TabularMdp& mdp() const { return mdp_; }
  int num_states() const { return mdp_.num_states(); }

  StateId start_state() const { return start_; }
  StateId goal_state() const { return goal_; }

  Cell cell_of(StateId s) const { return cells_[s]; }
  /// -1 for blocked or out-of-grid cells.
  StateId state_of(Cell c) const;
  bool is_free(Cell c) const { return state_of(c) >= 0; }

  /// Shortest commanded-move path length between states (BFS over the slip-free dynamics);
  /// -1 if unreachable.
  int path_distance(StateId from, StateId to) const;

  /// Cells of the slip neighbourhood of `s` that are free (always includes `s`).
  std::vector<StateId> slip_targets(StateId s) const;

 private:
  struct Parts;
  explicit GridWorld(Parts parts);

  GridSpec spec_;
  std::vector<Cell> cells_;
  std::vector<StateId> index_;  // y * width + x -> state or -1
  StateId start_ = 0;
  StateId goal_ = 0;
  TabularMdp mdp_;
  std::vector<std::vector<int>> distances_;
};

/// Validates the GridSpec and builds the MDP. States enumerate free cells row-major. Throws
/// std::invalid_argument for malformed specs or when the goal cannot be reached from the start.
GridWorld build_gridworld(const GridSpec& spec);

/// 8x8 world with a U-shaped obstacle whose opening faces away from the goal. The start sits
/// inside the cup and the goal below it.
GridSpec u_shaped_grid_spec();

}  // namespace odrl
