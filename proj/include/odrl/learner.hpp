#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "odrl/dynamics_model.hpp"
#include "odrl/gridworld.hpp"
#include "odrl/mdp.hpp"
#include "odrl/replay_buffer.hpp"
#include "odrl/variational_time.hpp"

namespace odrl {

enum class RewardKind {
  derived,  // (1 - q) log p_hat(g|s,a) - KL(q || p) with a per-sample q estimate
  sparse,   // 1{s' = g} with the prior as a fixed discount
};

enum class ContinuationSource {
  estimated,  // per-sample closed form, clipped to the prior
  fixed,      // read from a supplied TimePosterior (single goal)
  prior,      // constant prior
};

struct LearnerConfig {
  double learning_rate = 0.5;
  double relabel_prob = 0.8;
  int relabel_count = 4;
  int episodes = 500;
  int horizon = 100;
  int batch_size = 64;
  int updates_per_episode = 100;
  double entropy_weight = 0.01;
  double prior_continue = 0.99;
  double normalizer_rate = 0.001;
  bool normalize_rewards = true;
  std::size_t buffer_capacity = 100000;
  double model_smoothing = 1e-3;
  RewardKind reward = RewardKind::derived;
  bool greedy_behavior = false;  // act greedily instead of sampling the softmax policy
  // Starting value of every table entry. Unset means the value the untrained model implies:
  // log(1 / |S|) for the derived reward under the uniform counting model, 0 for the sparse one.
  std::optional<double> initial_q;
  int eval_rollouts = 20;
  int eval_horizon = 100;

  void validate() const;
  double initial_value(int n_states) const;
};

/// Q(s, a; g) for every goal: one (state x action) table per goal.
struct GoalConditionedQ {
  std::vector<Eigen::MatrixXd> by_goal;

  static GoalConditionedQ zeros(int n_states, int n_actions);
  static GoalConditionedQ constant(int n_states, int n_actions, double value);
  const Eigen::MatrixXd& operator[](StateId g) const { return by_goal[g]; }
  Eigen::MatrixXd& operator[](StateId g) { return by_goal[g]; }
};

/// Softmax policy pi(a|s) proportional to exp(Q(s,a) / alpha).
PolicyTable softmax_policy(const Eigen::MatrixXd& q_values, double entropy_weight);

struct TdOptions {
  ContinuationSource continuation = ContinuationSource::estimated;
  const TimePosterior* fixed_qpost = nullptr;  // required by ContinuationSource::fixed
  const PolicyTable* fixed_policy = nullptr;   // evaluate this policy instead of softmax(Q)
};

struct TdStats {
  double mean_q_cont = 0.0;
  double var_q_cont = 0.0;
  int clipped = 0;  // samples whose raw estimate exceeded the prior
  int samples = 0;
};

/// One Jacobi-style step on the squared TD error. For each sample the target is
///   r_hat + q_cont * (sum_a' pi(a'|s') Q(s',a') - alpha * KL(pi(.|s') || U)),
/// with r_hat the normalized reward; then Q(s,a;g) <- (1 - lr) Q + lr * (weighted mean target).
/// The estimated continuation is sigma(C * V(s') - log p_hat(g|s,a) + logit p), clipped to the
/// prior; C is the normalizer scale so that V is compared in reward units. `weights` defaults to
/// one per sample. Throws std::domain_error on a non-finite target.
TdStats td_update(GoalConditionedQ& q, std::span<const Transition> batch,
                  const DynamicsModel& model, const TimePrior& prior, RewardNormalizer& normalizer,
                  const LearnerConfig& cfg, const TdOptions& options = {},
                  std::span<const double> weights = {});

struct CurveRow {
  int episode = 0;
  std::int64_t env_steps = 0;
  double greedy_success = 0.0;
  double normalized_final_distance = 1.0;
  double mean_q_cont = 0.0;
  double var_q_cont = 0.0;
};

struct LearningResult {
  GoalConditionedQ q;
  PolicyTable policy;  // softmax policy for the commanded goal
  std::vector<CurveRow> curve;  // row 0 is the untrained reference
  DynamicsModel model;

  /// First episode whose greedy success reaches `threshold`, or -1.
  int episodes_to_success(double threshold) const;
};

/// Collect, store and relabel, update the counting model from the fresh episode, run the TD
/// updates, refresh the policy and evaluate the greedy policy from the start state.
LearningResult run_learning(const GridWorld& world, const LearnerConfig& cfg,
                            std::uint64_t rng_seed);

}  // namespace odrl
