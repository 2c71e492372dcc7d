#pragma once

#include <vector>

#include <Eigen/Dense>

#include "odrl/dynamics_model.hpp"
#include "odrl/mdp.hpp"
#include "odrl/solver.hpp"

namespace odrl {

/// Time-indexed soft values for a known termination time t_star. Layer t holds the decision
/// at step t; the last layer (t_star - 1) is the log-likelihood reward itself.
struct FixedTimeValue {
  std::vector<Eigen::MatrixXd> q_layers;  // t = 0 .. t_star - 1, each (state x action)
  std::vector<Eigen::VectorXd> v_layers;  // soft state values per layer, KL included
  std::vector<PolicyTable> policies;      // softmax of each Q layer

  int t_star() const { return static_cast<int>(q_layers.size()); }
  /// Greedy action per layer, lowest index on ties.
  std::vector<PolicyTable> greedy_policies() const;
};

/// Backward induction:
///   Q_{t*-1}(s,a) = log p_hat(g|s,a),  Q_t(s,a) = sum_s' P(s'|s,a) V_{t+1}(s'),
///   V_t(s) = alpha * log sum_a prior(a) exp(Q_t(s,a) / alpha).
/// Expectations use `mdp`; the terminal reward uses `model`.
FixedTimeValue fixed_time_solve(const TabularMdp& mdp, const DynamicsModel& model, StateId goal,
                                int t_star, const SolverConfig& cfg);

}  // namespace odrl
