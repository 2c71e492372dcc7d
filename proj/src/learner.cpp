#include "odrl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "odrl/sampling.hpp"

namespace odrl {

void LearnerConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("learning_rate must lie in (0, 1]");
  }
  if (!(relabel_prob >= 0.0 && relabel_prob <= 1.0)) {
    throw std::invalid_argument("relabel_prob must lie in [0, 1]");
  }
  if (relabel_count < 1 || episodes < 1 || horizon < 1 || batch_size < 1 ||
      updates_per_episode < 0 || eval_rollouts < 1 || eval_horizon < 1) {
    throw std::invalid_argument("learner counts must be positive");
  }
  if (initial_q && !std::isfinite(*initial_q)) throw std::invalid_argument("initial_q must be finite");
  if (!(entropy_weight > 0.0)) throw std::invalid_argument("entropy_weight must be positive");
  if (!(prior_continue > 0.0 && prior_continue < 1.0)) {
    throw std::invalid_argument("prior_continue must lie in (0, 1)");
  }
  if (!(normalizer_rate > 0.0 && normalizer_rate < 1.0)) {
    throw std::invalid_argument("normalizer_rate must lie in (0, 1)");
  }
  if (buffer_capacity == 0) throw std::invalid_argument("buffer_capacity must be positive");
}

double LearnerConfig::initial_value(int n_states) const {
  if (initial_q) return *initial_q;
  return reward == RewardKind::sparse ? 0.0 : -std::log(static_cast<double>(n_states));
}

GoalConditionedQ GoalConditionedQ::zeros(int n_states, int n_actions) {
  return constant(n_states, n_actions, 0.0);
}

GoalConditionedQ GoalConditionedQ::constant(int n_states, int n_actions, double value) {
  return {std::vector<Eigen::MatrixXd>(n_states, Eigen::MatrixXd::Constant(n_states, n_actions, value))};
}

PolicyTable softmax_policy(const Eigen::MatrixXd& q_values, double entropy_weight) {
  PolicyTable out{Eigen::MatrixXd(q_values.rows(), q_values.cols())};
  for (Eigen::Index s = 0; s < q_values.rows(); ++s) {
    const double top = q_values.row(s).maxCoeff();
    const Eigen::ArrayXd w = ((q_values.row(s).array() - top) / entropy_weight).exp().transpose();
    out.probs.row(s) = (w / w.sum()).transpose().matrix();
  }
  return out;
}

namespace {

// Soft value of a single state: E_pi[Q] - alpha * KL(pi || U).
double soft_value(const Eigen::MatrixXd& q, const Eigen::MatrixXd* fixed_probs, StateId s,
                  double alpha) {
  const int n_actions = static_cast<int>(q.cols());
  if (fixed_probs) {
    double e = 0.0;
    double kl = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double p = (*fixed_probs)(s, a);
      e += p * q(s, a);
      if (p > 0.0) kl += p * std::log(p * n_actions);
    }
    return e - alpha * kl;
  }
  // For the softmax policy this collapses to alpha * log mean exp(Q / alpha).
  const double top = q.row(s).maxCoeff();
  double total = 0.0;
  for (int a = 0; a < n_actions; ++a) total += std::exp((q(s, a) - top) / alpha);
  return top + alpha * std::log(total / n_actions);
}

}  // namespace

TdStats td_update(GoalConditionedQ& q, std::span<const Transition> batch,
                  const DynamicsModel& model, const TimePrior& prior, RewardNormalizer& normalizer,
                  const LearnerConfig& cfg, const TdOptions& options,
                  std::span<const double> weights) {
  if (batch.empty()) throw std::invalid_argument("td_update needs a non-empty batch");
  if (!weights.empty() && weights.size() != batch.size()) {
    throw std::invalid_argument("weights must match the batch size");
  }
  if (options.continuation == ContinuationSource::fixed && !options.fixed_qpost) {
    throw std::invalid_argument("fixed continuation requires a TimePosterior");
  }
  const double alpha = cfg.entropy_weight;
  const double prior_logit = sigma_inv(prior.continue_prob);
  const Eigen::MatrixXd* fixed_probs = options.fixed_policy ? &options.fixed_policy->probs : nullptr;
  const std::size_t n = batch.size();

  std::vector<double> raw(n);
  std::vector<double> next_v(n);
  std::vector<double> cont(n);
  TdStats stats;
  stats.samples = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& tr = batch[i];
    const Eigen::MatrixXd& table = q[tr.g];
    next_v[i] = soft_value(table, fixed_probs, tr.s_next, alpha);
    if (cfg.reward == RewardKind::sparse) {
      cont[i] = prior.continue_prob;
      raw[i] = tr.s_next == tr.g ? 1.0 : 0.0;
      continue;
    }
    const double ll = model.log_likelihood(tr.s, tr.a, tr.g);
    double c = prior.continue_prob;
    if (options.continuation == ContinuationSource::fixed) {
      c = options.fixed_qpost->continue_prob(tr.s, tr.a);
    } else if (options.continuation == ContinuationSource::estimated) {
      const double scale = cfg.normalize_rewards ? normalizer.scale : 1.0;
      c = sigma(scale * next_v[i] - ll + prior_logit);
      if (c > prior.continue_prob) {
        c = prior.continue_prob;
        ++stats.clipped;
      }
      c = std::max(c, kProbFloor);
    }
    cont[i] = c;
    raw[i] = (1.0 - c) * ll - bernoulli_kl(c, prior.continue_prob);
  }

  const std::vector<double> scaled =
      cfg.normalize_rewards ? normalizer.normalize(raw) : raw;

  // Accumulate weighted targets per (g, s, a) against the pre-update table.
  struct Slot {
    StateId g, s;
    ActionId a;
    double sum_w = 0.0, sum_wt = 0.0;
  };
  std::vector<Slot> slots;
  std::vector<int> slot_of;  // dense index over (g, s, a) within touched goals
  const int n_states = static_cast<int>(q.by_goal.size());
  const int n_actions = n_states > 0 ? static_cast<int>(q.by_goal[0].cols()) : 0;
  slot_of.assign(static_cast<std::size_t>(n_states) * n_states * n_actions, -1);
  double sum_c = 0.0, sum_c2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& tr = batch[i];
    const double target = scaled[i] + cont[i] * next_v[i];
    if (!std::isfinite(target)) {
      throw std::domain_error("non-finite TD target at sample " + std::to_string(i) + " (reward " +
                              std::to_string(scaled[i]) + ", continuation " +
                              std::to_string(cont[i]) + ", next value " +
                              std::to_string(next_v[i]) + ")");
    }
    const double w = weights.empty() ? 1.0 : weights[i];
    const std::size_t key = (static_cast<std::size_t>(tr.g) * n_states + tr.s) * n_actions + tr.a;
    if (slot_of[key] < 0) {
      slot_of[key] = static_cast<int>(slots.size());
      slots.push_back({tr.g, tr.s, tr.a});
    }
    Slot& slot = slots[slot_of[key]];
    slot.sum_w += w;
    slot.sum_wt += w * target;
    sum_c += cont[i];
    sum_c2 += cont[i] * cont[i];
  }
  for (const Slot& slot : slots) {
    if (slot.sum_w <= 0.0) continue;
    double& entry = q[slot.g](slot.s, slot.a);
    entry = (1.0 - cfg.learning_rate) * entry + cfg.learning_rate * slot.sum_wt / slot.sum_w;
  }
  stats.mean_q_cont = sum_c / n;
  stats.var_q_cont = std::max(0.0, sum_c2 / n - stats.mean_q_cont * stats.mean_q_cont);
  return stats;
}

int LearningResult::episodes_to_success(double threshold) const {
  for (const CurveRow& row : curve) {
    if (row.episode > 0 && row.greedy_success >= threshold) return row.episode;
  }
  return -1;
}

namespace {

struct Evaluation {
  double success = 0.0;
  double distance = 1.0;
};

Evaluation evaluate_greedy(const GridWorld& world, const Eigen::MatrixXd& q_goal,
                           const LearnerConfig& cfg, std::mt19937_64& rng) {
  const PolicyTable greedy = PolicyTable::greedy(q_goal);
  const TabularMdp& mdp = world.mdp();
  const StateId start = world.start_state();
  const StateId goal = world.goal_state();
  const double initial = std::max(1, world.path_distance(start, goal));
  int hits = 0;
  double dist = 0.0;
  for (int i = 0; i < cfg.eval_rollouts; ++i) {
    StateId s = start;
    for (int t = 0; t < cfg.eval_horizon && s != goal; ++t) {
      const ActionId a = sample_index(greedy.probs.row(s), rng);
      s = sample_index(mdp.transition().row(s, a), rng);
    }
    hits += s == goal ? 1 : 0;
    dist += world.path_distance(s, goal) / initial;
  }
  return {static_cast<double>(hits) / cfg.eval_rollouts, dist / cfg.eval_rollouts};
}

}  // namespace

LearningResult run_learning(const GridWorld& world, const LearnerConfig& cfg,
                            std::uint64_t rng_seed) {
  cfg.validate();
  const TabularMdp& mdp = world.mdp();
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  const StateId start = world.start_state();
  const StateId goal = world.goal_state();
  const TimePrior prior = TimePrior::make(cfg.prior_continue);

  std::mt19937_64 rng(rng_seed);
  std::mt19937_64 eval_rng(rng_seed ^ 0x5bd1e995u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  LearningResult result{GoalConditionedQ::constant(n_states, n_actions, cfg.initial_value(n_states)),
                        PolicyTable::uniform(n_states, n_actions),
                        {},
                        DynamicsModel::uniform(n_states, n_actions, ModelMode::counting, 1.0,
                                               cfg.model_smoothing)};
  ReplayBuffer original(cfg.buffer_capacity);
  ReplayBuffer relabeled(cfg.buffer_capacity);
  RewardNormalizer normalizer{1.0, cfg.normalizer_rate};

  const Evaluation before = evaluate_greedy(world, result.q[goal], cfg, eval_rng);
  result.curve.push_back({0, 0, before.success, 1.0, prior.continue_prob, 0.0});

  std::vector<Transition> batch(cfg.batch_size);
  std::vector<Transition> fresh;
  for (int episode = 1; episode <= cfg.episodes; ++episode) {
    const PolicyTable behavior = cfg.greedy_behavior ? PolicyTable::greedy(result.q[goal])
                                                     : softmax_policy(result.q[goal], cfg.entropy_weight);
    Trajectory traj;
    traj.states.push_back(start);
    for (int t = 0; t < cfg.horizon; ++t) {
      const StateId s = traj.states.back();
      const ActionId a = sample_index(behavior.probs.row(s), rng);
      traj.actions.push_back(a);
      traj.states.push_back(sample_index(mdp.transition().row(s, a), rng));
    }
    fresh.clear();
    for (std::size_t t = 0; t < traj.num_transitions(); ++t) {
      fresh.push_back({traj.states[t], traj.actions[t], traj.states[t + 1], goal});
      original.push(fresh.back());
    }
    if (cfg.relabel_prob > 0.0) {
      for (const Transition& tr : relabel_future(traj, cfg.relabel_count, rng)) relabeled.push(tr);
    }
    result.model.add_counts(fresh);

    double sum_c = 0.0, sum_var = 0.0;
    for (int u = 0; u < cfg.updates_per_episode; ++u) {
      for (Transition& tr : batch) {
        const bool use_relabel = !relabeled.empty() && unit(rng) < cfg.relabel_prob;
        tr = use_relabel ? relabeled.sample(rng) : original.sample(rng);
      }
      const TdStats stats = td_update(result.q, batch, result.model, prior, normalizer, cfg);
      sum_c += stats.mean_q_cont;
      sum_var += stats.var_q_cont;
    }
    const Evaluation eval = evaluate_greedy(world, result.q[goal], cfg, eval_rng);
    const int updates = std::max(1, cfg.updates_per_episode);
    result.curve.push_back({episode, static_cast<std::int64_t>(episode) * cfg.horizon, eval.success,
                            eval.distance, sum_c / updates, sum_var / updates});
  }
  result.policy = softmax_policy(result.q[goal], cfg.entropy_weight);
  return result;
}

}  // namespace odrl
