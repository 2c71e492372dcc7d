#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odrl/config.hpp"
#include "odrl/fixed_time.hpp"
#include "odrl/gridworld.hpp"
#include "odrl/learner.hpp"
#include "odrl/solver.hpp"

namespace odrl {

/// Initial dynamics model for the exact solver, as selected by the config.
DynamicsModel make_solver_model(const RunConfig& cfg, const GridWorld& world);

struct SolveOutput {
  GridWorld world;
  std::optional<PolicyIterationResult> iteration;  // every variant but fixed_time
  std::optional<FixedTimeValue> fixed_time;        // fixed_time only
  PolicyTable greedy;                              // greedy policy for the first layer
  double greedy_success = 0.0;                     // sampled rollouts from the start state
  // Per-state heatmap values, in state order.
  Eigen::VectorXd sparse_reward;  // 1{s = g}
  Eigen::VectorXd reward_init;    // E_pi[r(s, .)] after the first continuation update
  Eigen::VectorXd reward_final;   // E_pi[r(s, .)] at the final iterate
  Eigen::VectorXd value_final;    // soft state value at the final iterate
  Eigen::VectorXd q_cont_final;   // E_pi[q(s, .)] at the final iterate
  double wall_time_s = 0.0;
};

/// Runs the configured exact solver for one seed (the seed draws the initial policy and the
/// evaluation rollouts).
SolveOutput run_solve(const RunConfig& cfg, std::uint64_t seed);

/// Writes iterations.csv (or fixed_time layers), the five heatmaps, values.csv, q_table.csv,
/// q_cont.csv and policy.csv into `dir`. Returns the file names written.
std::vector<std::string> write_solve_outputs(const SolveOutput& out, const std::string& dir);

}  // namespace odrl
