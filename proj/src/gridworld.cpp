#include "odrl/gridworld.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace odrl {

namespace {

constexpr int kDx[kGridActions] = {0, 0, -1, 1};
constexpr int kDy[kGridActions] = {-1, 1, 0, 0};

std::string describe(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

}  // namespace

struct GridWorld::Parts {
  GridSpec spec;
  std::vector<Cell> cells;
  std::vector<StateId> index;
  StateId start;
  StateId goal;
  TabularMdp mdp;
};

namespace {

bool inside(const GridSpec& spec, Cell c) {
  return c.x >= 0 && c.y >= 0 && c.x < spec.width && c.y < spec.height;
}

}  // namespace

GridWorld::GridWorld(GridSpec spec) : GridWorld([&]() -> Parts {
  if (spec.width <= 0 || spec.height <= 0) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  if (!(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0)) {
    throw std::invalid_argument("slip_prob must lie in [0, 1)");
  }
  std::set<Cell> blocked(spec.blocked_cells.begin(), spec.blocked_cells.end());
  for (const Cell& c : blocked) {
    if (!inside(spec, c)) throw std::invalid_argument("blocked cell " + describe(c) + " is outside the grid");
  }
  for (const Cell& c : {spec.start_cell, spec.goal_cell}) {
    if (!inside(spec, c)) throw std::invalid_argument("cell " + describe(c) + " is outside the grid");
    if (blocked.contains(c)) throw std::invalid_argument("cell " + describe(c) + " is blocked");
  }

  std::vector<Cell> cells;
  std::vector<StateId> index(static_cast<std::size_t>(spec.width) * spec.height, -1);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      if (blocked.contains(Cell{x, y})) continue;
      index[static_cast<std::size_t>(y) * spec.width + x] = static_cast<StateId>(cells.size());
      cells.push_back({x, y});
    }
  }
  auto lookup = [&](Cell c) -> StateId {
    return inside(spec, c) ? index[static_cast<std::size_t>(c.y) * spec.width + c.x] : -1;
  };

  const int n = static_cast<int>(cells.size());
  TransitionTensor tensor(n, kGridActions);
  for (StateId s = 0; s < n; ++s) {
    const Cell c = cells[s];
    std::vector<StateId> slip;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (spec.neighborhood == SlipNeighborhood::von_neumann && dx != 0 && dy != 0) continue;
        const StateId t = lookup({c.x + dx, c.y + dy});
        if (t >= 0) slip.push_back(t);
      }
    }
    for (int a = 0; a < kGridActions; ++a) {
      StateId moved = lookup({c.x + kDx[a], c.y + kDy[a]});
      if (moved < 0) moved = s;
      tensor(s, a, moved) += 1.0 - spec.slip_prob;
      if (spec.slip_prob > 0.0) {
        const double share = spec.slip_prob / static_cast<double>(slip.size());
        for (StateId t : slip) tensor(s, a, t) += share;
      }
    }
  }

  const StateId start = lookup(spec.start_cell);
  const StateId goal = lookup(spec.goal_cell);

  // Flood fill over positive-probability transitions.
  std::vector<char> seen(n, 0);
  std::deque<StateId> frontier{start};
  seen[start] = 1;
  while (!frontier.empty()) {
    const StateId s = frontier.front();
    frontier.pop_front();
    for (int a = 0; a < kGridActions; ++a) {
      const auto row = tensor.row(s, a);
      for (StateId t = 0; t < n; ++t) {
        if (row[t] > 0.0 && !seen[t]) {
          seen[t] = 1;
          frontier.push_back(t);
        }
      }
    }
  }
  if (!seen[goal]) {
    throw std::invalid_argument("goal " + describe(spec.goal_cell) + " is unreachable from start " +
                                describe(spec.start_cell));
  }

  std::vector<double> initial(n, 0.0);
  initial[start] = 1.0;
  TabularMdp mdp(std::move(tensor), std::move(initial));
  return Parts{std::move(spec), std::move(cells), std::move(index), start, goal, std::move(mdp)};
}()) {}

GridWorld::GridWorld(Parts parts)
    : spec_(std::move(parts.spec)),
      cells_(std::move(parts.cells)),
      index_(std::move(parts.index)),
      start_(parts.start),
      goal_(parts.goal),
      mdp_(std::move(parts.mdp)) {
  const int n = static_cast<int>(cells_.size());
  distances_.assign(n, std::vector<int>(n, -1));
  for (StateId from = 0; from < n; ++from) {
    auto& dist = distances_[from];
    std::deque<StateId> frontier{from};
    dist[from] = 0;
    while (!frontier.empty()) {
      const StateId s = frontier.front();
      frontier.pop_front();
      const Cell c = cells_[s];
      for (int a = 0; a < kGridActions; ++a) {
        const StateId t = state_of({c.x + kDx[a], c.y + kDy[a]});
        if (t >= 0 && dist[t] < 0) {
          dist[t] = dist[s] + 1;
          frontier.push_back(t);
        }
      }
    }
  }
}

StateId GridWorld::state_of(Cell c) const {
  if (!inside(spec_, c)) return -1;
  return index_[static_cast<std::size_t>(c.y) * spec_.width + c.x];
}

int GridWorld::path_distance(StateId from, StateId to) const { return distances_[from][to]; }

std::vector<StateId> GridWorld::slip_targets(StateId s) const {
  std::vector<StateId> out;
  const Cell c = cells_[s];
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (spec_.neighborhood == SlipNeighborhood::von_neumann && dx != 0 && dy != 0) continue;
      const StateId t = state_of({c.x + dx, c.y + dy});
      if (t >= 0) out.push_back(t);
    }
  }
  return out;
}

GridWorld build_gridworld(const GridSpec& spec) { return GridWorld(spec); }

GridSpec u_shaped_grid_spec() {
  GridSpec spec;
  spec.width = 8;
  spec.height = 8;
  spec.slip_prob = 0.1;
  spec.neighborhood = SlipNeighborhood::moore;
  for (int y = 2; y <= 5; ++y) {
    spec.blocked_cells.push_back({2, y});
    spec.blocked_cells.push_back({5, y});
  }
  spec.blocked_cells.push_back({3, 5});
  spec.blocked_cells.push_back({4, 5});
  spec.start_cell = {3, 3};
  spec.goal_cell = {4, 7};
  return spec;
}

}  // namespace odrl
