#include "odrl/solver.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

namespace odrl {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::fixed_qT: return "fixed_qT";
    case Variant::simplified: return "simplified";
    case Variant::fixed_time: return "fixed_time";
    case Variant::sparse_indicator: return "sparse_baseline";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "fixed_qT") return Variant::fixed_qT;
  if (name == "simplified") return Variant::simplified;
  if (name == "fixed_time") return Variant::fixed_time;
  if (name == "sparse_baseline" || name == "sparse_indicator") return Variant::sparse_indicator;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

void SolverConfig::validate() const {
  if (!(entropy_weight > 0.0)) throw std::invalid_argument("entropy_weight must be positive");
  if (!(prior_continue > 0.0 && prior_continue < 1.0)) {
    throw std::invalid_argument("prior_continue must lie in (0, 1)");
  }
  if (!(eval_tolerance > 0.0)) throw std::invalid_argument("eval_tolerance must be positive");
  if (max_eval_iters < 1 || max_outer_iters < 1) {
    throw std::invalid_argument("iteration limits must be positive");
  }
  if (variant == Variant::fixed_time && t_star < 1) {
    throw std::invalid_argument("fixed_time variant requires t_star >= 1");
  }
}

double derived_reward(StateId s, ActionId a, StateId goal, const TimePosterior& qpost,
                      const TimePrior& prior, const DynamicsModel& model) {
  const double c = qpost.continue_prob(s, a);
  return (1.0 - c) * model.log_likelihood(s, a, goal) - bernoulli_kl(c, prior.continue_prob);
}

Eigen::MatrixXd derived_reward_table(StateId goal, const TimePosterior& qpost,
                                     const TimePrior& prior, const DynamicsModel& model) {
  Eigen::MatrixXd r(model.num_states(), model.num_actions());
  for (StateId s = 0; s < model.num_states(); ++s) {
    for (ActionId a = 0; a < model.num_actions(); ++a) {
      r(s, a) = derived_reward(s, a, goal, qpost, prior, model);
    }
  }
  return r;
}

Eigen::MatrixXd log_likelihood_table(const DynamicsModel& model, StateId goal) {
  Eigen::MatrixXd out(model.num_states(), model.num_actions());
  for (StateId s = 0; s < model.num_states(); ++s) {
    for (ActionId a = 0; a < model.num_actions(); ++a) out(s, a) = model.log_likelihood(s, a, goal);
  }
  return out;
}

Eigen::MatrixXd sparse_reward_table(const TransitionTensor& dynamics, StateId goal) {
  Eigen::MatrixXd out(dynamics.num_states(), dynamics.num_actions());
  for (StateId s = 0; s < dynamics.num_states(); ++s) {
    for (ActionId a = 0; a < dynamics.num_actions(); ++a) out(s, a) = dynamics(s, a, goal);
  }
  return out;
}

Eigen::VectorXd policy_values(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                              const SolverConfig& cfg) {
  const Eigen::VectorXd expected = (policy.probs.array() * q_values.array()).rowwise().sum();
  return expected + cfg.kl_sign * cfg.entropy_weight * kl_to_uniform(policy);
}

namespace {

double next_value(const TransitionTensor& dynamics, StateId s, ActionId a,
                  const Eigen::VectorXd& v) {
  const auto row = dynamics.row(s, a);
  double acc = 0.0;
  for (StateId sn = 0; sn < dynamics.num_states(); ++sn) acc += row[sn] * v(sn);
  return acc;
}

void check_dims(const Eigen::MatrixXd& m, const TransitionTensor& dynamics, const char* what) {
  if (m.rows() != dynamics.num_states() || m.cols() != dynamics.num_actions()) {
    throw std::invalid_argument(std::string(what) + " has mismatched dimensions");
  }
}

}  // namespace

Eigen::MatrixXd backup_with_reward(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                                   const Eigen::MatrixXd& continuation,
                                   const Eigen::MatrixXd& reward,
                                   const TransitionTensor& dynamics, const SolverConfig& cfg) {
  check_dims(q_values, dynamics, "Q table");
  check_dims(policy.probs, dynamics, "policy");
  check_dims(continuation, dynamics, "continuation table");
  check_dims(reward, dynamics, "reward table");
  const Eigen::VectorXd v = policy_values(q_values, policy, cfg);
  Eigen::MatrixXd out(dynamics.num_states(), dynamics.num_actions());
  for (StateId s = 0; s < dynamics.num_states(); ++s) {
    for (ActionId a = 0; a < dynamics.num_actions(); ++a) {
      out(s, a) = reward(s, a) + continuation(s, a) * next_value(dynamics, s, a, v);
    }
  }
  return out;
}

QTable bellman_backup(const QTable& q, const PolicyTable& policy, const TimePosterior& qpost,
                      const TransitionTensor& dynamics, const DynamicsModel& model, StateId goal,
                      const SolverConfig& cfg) {
  const Eigen::MatrixXd reward = derived_reward_table(goal, qpost, cfg.prior(), model);
  return {backup_with_reward(q.values, policy, qpost.continue_prob, reward, dynamics, cfg), goal};
}

QTable simplified_backup(const QTable& q, const PolicyTable& policy,
                         const TransitionTensor& dynamics, const DynamicsModel& model,
                         StateId goal, double gamma, const SolverConfig& cfg) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  const Eigen::VectorXd v = policy_values(q.values, policy, cfg);
  QTable out{Eigen::MatrixXd(dynamics.num_states(), dynamics.num_actions()), goal};
  for (StateId s = 0; s < dynamics.num_states(); ++s) {
    for (ActionId a = 0; a < dynamics.num_actions(); ++a) {
      out.values(s, a) = (1.0 - gamma) * model.log_likelihood(s, a, goal) +
                         gamma * next_value(dynamics, s, a, v);
    }
  }
  return out;
}

namespace {

EvaluationResult iterate_to_fixed_point(const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& op,
                                        Eigen::MatrixXd q, StateId goal, const SolverConfig& cfg) {
  EvaluationResult out;
  for (int sweep = 1; sweep <= cfg.max_eval_iters; ++sweep) {
    Eigen::MatrixXd next = op(q);
    if (!next.allFinite()) throw std::runtime_error("policy evaluation produced non-finite values");
    const double residual = (next - q).cwiseAbs().maxCoeff();
    out.residuals.push_back(residual);
    q = std::move(next);
    if (residual <= cfg.eval_tolerance) {
      out.q = {std::move(q), goal};
      out.sweeps = sweep;
      return out;
    }
  }
  throw std::runtime_error("policy evaluation did not converge within " +
                           std::to_string(cfg.max_eval_iters) + " sweeps (last residual " +
                           std::to_string(out.residuals.back()) + ")");
}

}  // namespace

EvaluationResult policy_evaluation(const PolicyTable& policy, const TimePosterior& qpost,
                                   const TransitionTensor& dynamics, const DynamicsModel& model,
                                   StateId goal, const SolverConfig& cfg,
                                   const std::optional<Eigen::MatrixXd>& initial) {
  if (!(qpost.max_entry() < 1.0)) throw std::invalid_argument("continuation must stay below 1");
  const Eigen::MatrixXd reward = derived_reward_table(goal, qpost, cfg.prior(), model);
  Eigen::MatrixXd q0 = initial.value_or(
      Eigen::MatrixXd::Zero(dynamics.num_states(), dynamics.num_actions()));
  auto op = [&](const Eigen::MatrixXd& q) {
    return backup_with_reward(q, policy, qpost.continue_prob, reward, dynamics, cfg);
  };
  return iterate_to_fixed_point(op, std::move(q0), goal, cfg);
}

Eigen::MatrixXd evaluate_direct(const PolicyTable& policy, const Eigen::MatrixXd& continuation,
                                const Eigen::MatrixXd& reward, const TransitionTensor& dynamics,
                                const SolverConfig& cfg) {
  check_dims(policy.probs, dynamics, "policy");
  check_dims(continuation, dynamics, "continuation table");
  check_dims(reward, dynamics, "reward table");
  const int n_states = dynamics.num_states();
  const int n_actions = dynamics.num_actions();
  const int n = n_states * n_actions;
  const Eigen::VectorXd kl_term = cfg.kl_sign * cfg.entropy_weight * kl_to_uniform(policy);

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) {
      const int row = s * n_actions + a;
      const double c = continuation(s, a);
      const auto p = dynamics.row(s, a);
      double bonus = 0.0;
      for (StateId sn = 0; sn < n_states; ++sn) {
        if (p[sn] == 0.0) continue;
        bonus += p[sn] * kl_term(sn);
        for (ActionId an = 0; an < n_actions; ++an) {
          system(row, sn * n_actions + an) -= c * p[sn] * policy.probs(sn, an);
        }
      }
      rhs(row) = reward(s, a) + c * bonus;
    }
  }
  const Eigen::VectorXd x = system.partialPivLu().solve(rhs);
  if (!x.allFinite()) throw std::runtime_error("direct policy evaluation produced non-finite values");
  Eigen::MatrixXd out(n_states, n_actions);
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) out(s, a) = x(s * n_actions + a);
  }
  return out;
}

QTable policy_evaluation_direct(const PolicyTable& policy, const TimePosterior& qpost,
                                const TransitionTensor& dynamics, const DynamicsModel& model,
                                StateId goal, const SolverConfig& cfg) {
  if (!(qpost.max_entry() < 1.0)) throw std::invalid_argument("continuation must stay below 1");
  const Eigen::MatrixXd reward = derived_reward_table(goal, qpost, cfg.prior(), model);
  return {evaluate_direct(policy, qpost.continue_prob, reward, dynamics, cfg), goal};
}

PolicyTable policy_improvement(const QTable& q, const SolverConfig& cfg) {
  if (!q.values.allFinite()) throw std::domain_error("policy improvement needs a finite Q table");
  PolicyTable out{Eigen::MatrixXd(q.values.rows(), q.values.cols())};
  for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
    const double top = q.values.row(s).maxCoeff();
    const Eigen::ArrayXd w = ((q.values.row(s).array() - top) / cfg.entropy_weight).exp().transpose();
    out.probs.row(s) = (w / w.sum()).transpose().matrix();
  }
  return out;
}

double regularized_objective(const Eigen::MatrixXd& q_values, const PolicyTable& policy, StateId s,
                             double entropy_weight) {
  const int n_actions = policy.num_actions();
  double expected = 0.0;
  double kl = 0.0;
  for (ActionId a = 0; a < n_actions; ++a) {
    const double p = policy.probs(s, a);
    expected += p * q_values(s, a);
    if (p > 0.0) kl += p * std::log(p * n_actions);
  }
  return expected - entropy_weight * kl;
}

PolicyTable random_policy(int n_states, int n_actions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd logits(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) logits(s, a) = normal(rng);
  }
  SolverConfig unit;
  return policy_improvement(QTable{logits, 0}, unit);
}

ModelSchedule::ModelSchedule(DynamicsModel model, std::optional<TabularMdp> truth)
    : model_(std::move(model)), truth_(std::move(truth)) {}

ModelSchedule ModelSchedule::fixed(DynamicsModel model) {
  return ModelSchedule(std::move(model), std::nullopt);
}

ModelSchedule ModelSchedule::mixing(DynamicsModel initial, TabularMdp truth) {
  if (initial.mode() != ModelMode::mixing) {
    throw std::invalid_argument("mixing schedule needs a model in mixing mode");
  }
  return ModelSchedule(std::move(initial), std::move(truth));
}

void ModelSchedule::advance() {
  if (truth_) model_.apply_mixing(*truth_);
}

namespace {

struct Evaluated {
  Eigen::MatrixXd q;
  Eigen::VectorXd v;
  double objective = 0.0;
  double residual = 0.0;
};

class Evaluator {
 public:
  Evaluator(const TabularMdp& mdp, StateId goal, const SolverConfig& cfg)
      : mdp_(mdp), goal_(goal), cfg_(cfg) {}

  Evaluated run(const PolicyTable& policy, const Eigen::MatrixXd& continuation,
                const Eigen::MatrixXd& reward, const DynamicsModel& model) const {
    Evaluated out;
    const TransitionTensor& p = mdp_.transition();
    if (cfg_.variant == Variant::simplified && cfg_.eval_method == EvalMethod::iterative) {
      auto op = [&](const Eigen::MatrixXd& q) {
        return simplified_backup(QTable{q, goal_}, policy, p, model, goal_, cfg_.prior_continue, cfg_)
            .values;
      };
      out.q = iterate_to_fixed_point(op, Eigen::MatrixXd::Zero(p.num_states(), p.num_actions()),
                                     goal_, cfg_)
                  .q.values;
    } else if (cfg_.eval_method == EvalMethod::iterative) {
      auto op = [&](const Eigen::MatrixXd& q) {
        return backup_with_reward(q, policy, continuation, reward, p, cfg_);
      };
      out.q = iterate_to_fixed_point(op, Eigen::MatrixXd::Zero(p.num_states(), p.num_actions()),
                                     goal_, cfg_)
                  .q.values;
    } else {
      out.q = evaluate_direct(policy, continuation, reward, p, cfg_);
    }
    out.residual =
        (backup_with_reward(out.q, policy, continuation, reward, p, cfg_) - out.q).cwiseAbs().maxCoeff();
    out.v = policy_values(out.q, policy, cfg_);
    const auto init = mdp_.initial_dist();
    for (StateId s = 0; s < p.num_states(); ++s) out.objective += init[s] * out.v(s);
    return out;
  }

 private:
  const TabularMdp& mdp_;
  StateId goal_;
  const SolverConfig& cfg_;
};

double min_gain(const Eigen::VectorXd& after, const Eigen::VectorXd& before) {
  // Relative to the magnitude so that large values do not trip the slack on rounding.
  return ((after - before).array() / (1.0 + before.array().abs())).minCoeff();
}

}  // namespace

PolicyIterationResult policy_iteration(const TabularMdp& mdp, StateId goal,
                                       const SolverConfig& cfg, ModelSchedule schedule,
                                       const PolicyTable& initial_policy,
                                       const IterationObserver& observer) {
  cfg.validate();
  if (cfg.variant == Variant::fixed_time) {
    throw std::invalid_argument("policy_iteration does not handle the fixed_time variant");
  }
  if (goal < 0 || goal >= mdp.num_states()) throw std::invalid_argument("goal out of range");
  initial_policy.check(1e-9);

  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  const TimePrior prior = cfg.prior();
  const double slack = 10.0 * cfg.eval_tolerance;
  const Evaluator evaluator(mdp, goal, cfg);

  PolicyIterationResult result;
  result.policy = initial_policy;
  result.qpost = TimePosterior::constant(n_states, n_actions, prior.continue_prob);

  auto reward_for = [&](const TimePosterior& qpost, const DynamicsModel& model) -> Eigen::MatrixXd {
    switch (cfg.variant) {
      case Variant::sparse_indicator: return sparse_reward_table(mdp.transition(), goal);
      case Variant::simplified:
        return (1.0 - prior.continue_prob) * log_likelihood_table(model, goal);
      default: return derived_reward_table(goal, qpost, prior, model);
    }
  };

  double previous_objective = 0.0;
  for (int it = 1; it <= cfg.max_outer_iters; ++it) {
    schedule.advance();
    const DynamicsModel& model = schedule.current();
    IterationRecord rec;
    rec.iteration = it;

    const Evaluated start = evaluator.run(result.policy, result.qpost.continue_prob,
                                          reward_for(result.qpost, model), model);
    rec.objective_start = start.objective;

    Evaluated after_q = start;
    if (cfg.variant == Variant::full) {
      result.qpost = optimal_continue_prob(QTable{start.q, goal}, result.policy, model,
                                           mdp.transition(), goal, prior, cfg.entropy_weight);
      after_q = evaluator.run(result.policy, result.qpost.continue_prob,
                              reward_for(result.qpost, model), model);
    }
    rec.objective_after_q = after_q.objective;
    rec.min_gain_q = min_gain(after_q.v, start.v);
    if (it == 1) result.first_reward = reward_for(result.qpost, model);

    PolicyTable improved = policy_improvement(QTable{after_q.q, goal}, cfg);
    const Eigen::MatrixXd reward = reward_for(result.qpost, model);
    const Evaluated after_pi = evaluator.run(improved, result.qpost.continue_prob, reward, model);
    rec.objective_after_pi = after_pi.objective;
    rec.min_gain_pi = min_gain(after_pi.v, after_q.v);
    rec.eval_residual = after_pi.residual;
    rec.policy_change = (improved.probs - result.policy.probs).cwiseAbs().maxCoeff();

    if (result.monotonicity_violation < 0 && (rec.min_gain_q < -slack || rec.min_gain_pi < -slack)) {
      result.monotonicity_violation = it;
    }

    result.policy = std::move(improved);
    result.q = {after_pi.q, goal};
    result.final_reward = reward;
    result.final_values = after_pi.v;
    if (observer) rec.greedy_success = observer(it, result.policy, result.q);
    result.log.push_back(rec);

    const bool steady = it > 1 && std::abs(rec.objective_after_pi - previous_objective) < cfg.convergence_tol &&
                        rec.policy_change < cfg.convergence_tol;
    previous_objective = rec.objective_after_pi;
    if (steady) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace odrl
