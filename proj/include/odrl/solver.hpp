#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odrl/dynamics_model.hpp"
#include "odrl/mdp.hpp"
#include "odrl/variational_time.hpp"

namespace odrl {

enum class Variant {
  full,              // alternate evaluation, optimal continuation update and policy improvement
  fixed_qT,          // continuation pinned to the prior
  simplified,        // q_T = p_T: log-likelihood reward with a fixed discount
  fixed_time,        // known termination time t_star, backward induction
  sparse_indicator,  // indicator reward E[1{s' = g}] with a fixed discount (baseline)
};

enum class EvalMethod { iterative, direct };

std::string to_string(Variant v);
/// Accepts full, fixed_qT, simplified, fixed_time and sparse_baseline (or sparse_indicator).
Variant parse_variant(const std::string& name);

struct SolverConfig {
  double entropy_weight = 1.0;
  double prior_continue = 0.99;
  double eval_tolerance = 1e-10;
  int max_eval_iters = 100000;
  int max_outer_iters = 100;
  Variant variant = Variant::full;
  int t_star = 0;  // fixed_time only
  EvalMethod eval_method = EvalMethod::direct;
  /// Sign of the policy KL inside V. -1 is the regularized objective; +1 reproduces the
  /// operator with the opposite sign and breaks the objective identities.
  double kl_sign = -1.0;
  double convergence_tol = 1e-8;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  TimePrior prior() const { return TimePrior::make(prior_continue); }
};

/// (1 - q(s,a)) log p_hat(g|s,a) - KL(q(s,a) || prior).
double derived_reward(StateId s, ActionId a, StateId goal, const TimePosterior& qpost,
                      const TimePrior& prior, const DynamicsModel& model);
Eigen::MatrixXd derived_reward_table(StateId goal, const TimePosterior& qpost,
                                     const TimePrior& prior, const DynamicsModel& model);
Eigen::MatrixXd log_likelihood_table(const DynamicsModel& model, StateId goal);
/// Expected indicator reward P(g | s, a).
Eigen::MatrixXd sparse_reward_table(const TransitionTensor& dynamics, StateId goal);

/// Soft value with the configured KL sign and weight.
Eigen::VectorXd policy_values(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                              const SolverConfig& cfg);

/// (T Q)(s,a) = reward(s,a) + c(s,a) * sum_s' P(s'|s,a) V(s') with an explicit reward table.
Eigen::MatrixXd backup_with_reward(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                                   const Eigen::MatrixXd& continuation,
                                   const Eigen::MatrixXd& reward,
                                   const TransitionTensor& dynamics, const SolverConfig& cfg);

/// The outcome-driven backup. Bootstraps through `dynamics`; the reward uses `model`.
QTable bellman_backup(const QTable& q, const PolicyTable& policy, const TimePosterior& qpost,
                      const TransitionTensor& dynamics, const DynamicsModel& model, StateId goal,
                      const SolverConfig& cfg);

/// Backup for q_T = p_T geometric with parameter gamma:
///   Q(s,a) = (1 - gamma) log p_hat(g|s,a) + gamma * E[V(s')].
QTable simplified_backup(const QTable& q, const PolicyTable& policy,
                         const TransitionTensor& dynamics, const DynamicsModel& model,
                         StateId goal, double gamma, const SolverConfig& cfg);

struct EvaluationResult {
  QTable q;
  int sweeps = 0;
  std::vector<double> residuals;  // sup-norm change per sweep
};

/// Iterates the backup from `initial` (zeros when absent) until the sup-norm change drops
/// below cfg.eval_tolerance. Throws std::runtime_error after cfg.max_eval_iters sweeps.
EvaluationResult policy_evaluation(const PolicyTable& policy, const TimePosterior& qpost,
                                   const TransitionTensor& dynamics, const DynamicsModel& model,
                                   StateId goal, const SolverConfig& cfg,
                                   const std::optional<Eigen::MatrixXd>& initial = std::nullopt);

/// Same fixed point by a dense linear solve of (I - C P Pi) Q = r + C P (kl_sign alpha KL).
QTable policy_evaluation_direct(const PolicyTable& policy, const TimePosterior& qpost,
                                const TransitionTensor& dynamics, const DynamicsModel& model,
                                StateId goal, const SolverConfig& cfg);

/// Fixed point for an explicit reward and continuation table.
Eigen::MatrixXd evaluate_direct(const PolicyTable& policy, const Eigen::MatrixXd& continuation,
                                const Eigen::MatrixXd& reward, const TransitionTensor& dynamics,
                                const SolverConfig& cfg);

/// pi+(a|s) proportional to exp(Q(s,a) / alpha) (uniform prior), max-subtracted.
PolicyTable policy_improvement(const QTable& q, const SolverConfig& cfg);

/// E_pi[Q(s,.)] - alpha * KL(pi(.|s) || uniform) for one state.
double regularized_objective(const Eigen::MatrixXd& q_values, const PolicyTable& policy, StateId s,
                             double entropy_weight);

/// Softmax of standard-normal logits, seeded.
PolicyTable random_policy(int n_states, int n_actions, std::uint64_t seed);

/// Supplies the dynamics model in force at each outer iteration.
class ModelSchedule {
 public:
  static ModelSchedule fixed(DynamicsModel model);
  /// Applies one mixing update toward `truth` at the start of every iteration.
  static ModelSchedule mixing(DynamicsModel initial, TabularMdp truth);

  const DynamicsModel& current() const { return model_; }
  void advance();
  bool is_static() const { return !truth_.has_value(); }

 private:
  explicit ModelSchedule(DynamicsModel model, std::optional<TabularMdp> truth);
  DynamicsModel model_;
  std::optional<TabularMdp> truth_;
};

struct IterationRecord {
  int iteration = 0;
  double objective_start = 0.0;     // F before the continuation update
  double objective_after_q = 0.0;   // F after the continuation update
  double objective_after_pi = 0.0;  // F after policy improvement
  double min_gain_q = 0.0;          // min over states of the value change from the q-step
  double min_gain_pi = 0.0;         // same for the policy step
  double eval_residual = 0.0;       // ||T Q - Q|| of the final evaluation this iteration
  double policy_change = 0.0;       // ||pi_new - pi_old||_inf
  double greedy_success = -1.0;     // filled by the observer, -1 when unset
};

struct PolicyIterationResult {
  PolicyTable policy;
  QTable q;
  TimePosterior qpost;
  std::vector<IterationRecord> log;
  bool converged = false;
  /// First iteration whose q-step or policy step lowered some state's value by more than
  /// 10 * eval_tolerance (relative to 1 + |V|); -1 if none.
  int monotonicity_violation = -1;
  Eigen::MatrixXd first_reward;   // derived reward after the first continuation update
  Eigen::MatrixXd final_reward;   // derived reward at the final iterate
  Eigen::VectorXd final_values;   // soft state values at the final iterate
};

/// Called after every outer iteration; the return value is stored as greedy_success.
using IterationObserver = std::function<double(int iteration, const PolicyTable&, const QTable&)>;

/// Alternates evaluation, continuation update (full variant) and policy improvement, using the
/// schedule's model for rewards and `mdp` dynamics for expectations. Not for fixed_time.
PolicyIterationResult policy_iteration(const TabularMdp& mdp, StateId goal,
                                       const SolverConfig& cfg, ModelSchedule schedule,
                                       const PolicyTable& initial_policy,
                                       const IterationObserver& observer = {});

}  // namespace odrl
