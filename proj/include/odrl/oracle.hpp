#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "odrl/dynamics_model.hpp"
#include "odrl/mdp.hpp"
#include "odrl/variational_time.hpp"

namespace odrl {

struct EnumerationResult {
  double objective_F = 0.0;
  double tail_bound = 0.0;  // bound on |F - truncated sum|
  std::optional<double> log_marginal;
  std::int64_t trajectories_enumerated = 0;  // state-action pairs propagated
  int horizon = 0;
};

/// What the enumeration evaluates: policy, continuation table, prior, model and weights.
struct ObjectiveQuery {
  const TabularMdp* mdp = nullptr;
  const PolicyTable* policy = nullptr;
  const TimePosterior* qpost = nullptr;
  const DynamicsModel* model = nullptr;
  TimePrior prior{};
  StateId goal = 0;
  StateId start = 0;
  double entropy_weight = 1.0;
};

/// Truncated unknown-time objective
///   F = sum_{t <= T_max} E[ prod_{i<t} q(s_i,a_i) * (r(s_t,a_t) - alpha * KL(pi(.|s_t) || U)) ]
/// by forward propagation of the survival-weighted state occupancy. This is the same sum as
/// listing every (t, trajectory) pair and weighting it by its probability, grouped by state.
/// With `forced_stop` the time distribution is cut at T_max (the last step terminates with
/// certainty, for both q and the prior), which makes the sum exact with no tail.
/// Throws std::runtime_error when the tail bound exceeds `accuracy`.
EnumerationResult enumerate_objective(const ObjectiveQuery& query, int t_max,
                                      double accuracy = 1e300, bool forced_stop = false);

/// log sum_t p_T(t) E_U[ model(g | s_t, a_t) ] under the uniform prior policy, where p_T is
/// geometric with the prior's continue probability. With the exact model this is
/// log Pr(outcome g | s0). `forced_stop` cuts p_T at T_max; otherwise the missing prior mass
/// is reported as `tail_bound`. Throws std::domain_error when the marginal is zero.
EnumerationResult log_marginal_outcome(const TabularMdp& mdp, const DynamicsModel& model,
                                       const TimePrior& prior, StateId goal, StateId start,
                                       int t_max, bool forced_stop = false);

struct KlIdentity {
  double kl_direct = 0.0;      // KL(q || posterior) by explicit summation
  double neg_F_plus_C = 0.0;   // -F + log marginal
  std::int64_t trajectories = 0;
};

/// Lists every (t, s_0 a_0 ... s_t a_t) pair up to T_max with the time distribution cut at
/// T_max, builds the exact posterior by Bayes rule, and returns KL(q || posterior) next to
/// -F + C. Requires entropy_weight == 1. Rejects instances above 4 states, 3 actions, T_max 8.
KlIdentity verify_kl_identity(const ObjectiveQuery& query, int t_max);

struct QcontReport {
  double max_argmax_gap = 0.0;       // |closed form - grid argmax|, worst pair
  double max_second_difference = 0.0;  // largest second difference of the objective on the grid
  double grid_step = 0.0;
  bool ok = false;
};

/// For each (s,a), scans J(c) = (1-c) log p_hat(g|s,a) - KL(c || p) + c E[V(s')] over the grid
/// {step, 2 step, ..., 1 - step} and compares its argmax with `closed_form`.
QcontReport verify_optimal_qcont(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                                 const DynamicsModel& model, const TabularMdp& mdp, StateId goal,
                                 const TimePrior& prior, double entropy_weight,
                                 const TimePosterior& closed_form, double grid_step = 1e-3);

/// Fixed-time objective E[ log p_hat(g | s_{t*-1}, a_{t*-1}) ] - alpha * sum_t E[KL(pi_t || U)]
/// by listing every trajectory of t_star steps.
double fixed_time_objective_enumerated(const TabularMdp& mdp, const DynamicsModel& model,
                                       const std::vector<PolicyTable>& policies, StateId goal,
                                       StateId start, double entropy_weight);

}  // namespace odrl
