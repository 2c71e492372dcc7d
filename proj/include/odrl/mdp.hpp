#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace odrl {

using StateId = int;
using ActionId = int;

/// Row-stochastic tensor P(s' | s, a) stored flat in (s, a, s') lexicographic order.
class TransitionTensor {
 public:
  TransitionTensor() = default;
  TransitionTensor(int n_states, int n_actions);
  TransitionTensor(int n_states, int n_actions, std::vector<double> data);

  int num_states() const { return n_states_; }
  int num_actions() const { return n_actions_; }

  double operator()(StateId s, ActionId a, StateId next) const {
    return data_[index(s, a, next)];
  }
  double& operator()(StateId s, ActionId a, StateId next) { return data_[index(s, a, next)]; }

  std::span<const double> row(StateId s, ActionId a) const {
    return {data_.data() + index(s, a, 0), static_cast<std::size_t>(n_states_)};
  }
  std::span<double> row(StateId s, ActionId a) {
    return {data_.data() + index(s, a, 0), static_cast<std::size_t>(n_states_)};
  }

  const std::vector<double>& data() const { return data_; }

  /// Throws std::invalid_argument if any row is not a probability simplex within `tol`.
  void check_simplex(double tol = 1e-12) const;

  /// Largest |sum(row) - 1| over all rows.
  double max_row_error() const;

  friend bool operator==(const TransitionTensor&, const TransitionTensor&) = default;

 private:
  std::size_t index(StateId s, ActionId a, StateId next) const {
    return (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + next;
  }

  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> data_;
};

/// Finite MDP: exact dynamics plus initial state distribution. Immutable after construction.
class TabularMdp {
 public:
  TabularMdp(TransitionTensor transition, std::vector<double> initial_dist);

  int num_states() const { return transition_.num_states(); }
  int num_actions() const { return transition_.num_actions(); }
  const TransitionTensor& transition() const { return transition_; }
  double prob(StateId s, ActionId a, StateId next) const { return transition_(s, a, next); }
  std::span<const double> initial_dist() const { return initial_dist_; }

 private:
  TransitionTensor transition_;
  std::vector<double> initial_dist_;
};

/// Stochastic policy pi(a | s) as a (state x action) matrix. Rows are distributions.
struct PolicyTable {
  Eigen::MatrixXd probs;

  static PolicyTable uniform(int n_states, int n_actions);
  /// Deterministic policy selecting argmax_a values(s, a); ties go to the lowest action index.
  static PolicyTable greedy(const Eigen::MatrixXd& values);

  int num_states() const { return static_cast<int>(probs.rows()); }
  int num_actions() const { return static_cast<int>(probs.cols()); }

  /// Throws std::invalid_argument unless every row is non-negative and sums to 1 within `tol`.
  void check(double tol = 1e-12) const;
};

/// Goal-conditioned action values Q(s, a; g) for a single goal.
struct QTable {
  Eigen::MatrixXd values;
  StateId goal = 0;
};

struct Trajectory {
  std::vector<StateId> states;
  std::vector<ActionId> actions;  // states.size() - 1 entries

  std::size_t num_transitions() const { return actions.size(); }
};

/// KL(pi(.|s) || uniform) for every state.
Eigen::VectorXd kl_to_uniform(const PolicyTable& policy);

/// Samples `horizon` transitions starting from the MDP's initial distribution.
Trajectory sample_rollout(const TabularMdp& mdp, const PolicyTable& policy, int horizon,
                          std::uint64_t rng_seed);

/// As above but starting from a fixed state.
Trajectory sample_rollout_from(const TabularMdp& mdp, const PolicyTable& policy, StateId start,
                               int horizon, std::uint64_t rng_seed);

/// Expected visit counts per state over steps 0..horizon, by forward propagation of the
/// state distribution. Entries are normalized by (horizon + 1) so they sum to 1.
Eigen::VectorXd state_occupancy(const TabularMdp& mdp, const PolicyTable& policy, int horizon);

/// Fraction of `n_rollouts` rollouts from `start` that visit `goal` within `horizon` steps.
double goal_success_rate(const TabularMdp& mdp, const PolicyTable& policy, StateId start,
                         StateId goal, int horizon, int n_rollouts, std::uint64_t rng_seed);

/// Exact probability that the policy visits `goal` from `start` within `horizon` steps, by
/// propagating the state distribution with the goal made absorbing.
double goal_hit_probability(const TabularMdp& mdp, const PolicyTable& policy, StateId start,
                            StateId goal, int horizon);

/// Flat numeric format: "n_states n_actions" header line, then one entry per line in
/// (s, a, s') order. MDP files append the initial distribution as n_states further lines.
void write_tensor_file(const std::string& path, const TransitionTensor& tensor);
void write_mdp_file(const std::string& path, const TabularMdp& mdp);
TransitionTensor read_tensor_file(const std::string& path);
/// Files without the trailing initial distribution load with a uniform one.
TabularMdp read_mdp_file(const std::string& path);

}  // namespace odrl
