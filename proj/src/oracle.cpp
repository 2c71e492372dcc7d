#include "odrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace odrl {

namespace {

// Local copies of the scalar formulas so the oracle does not lean on the solver's code.
double bern_kl(double q, double p) {
  double out = 0.0;
  if (q > 0.0) out += q * std::log(q / p);
  if (q < 1.0) out += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  return out;
}

double policy_kl(const PolicyTable& policy, StateId s) {
  const int n_actions = policy.num_actions();
  double kl = 0.0;
  for (ActionId a = 0; a < n_actions; ++a) {
    const double p = policy.probs(s, a);
    if (p > 0.0) kl += p * std::log(p * n_actions);
  }
  return kl;
}

void check_query(const ObjectiveQuery& q) {
  if (!q.mdp || !q.policy || !q.qpost || !q.model) {
    throw std::invalid_argument("objective query is missing an input");
  }
  const int n = q.mdp->num_states();
  if (q.goal < 0 || q.goal >= n || q.start < 0 || q.start >= n) {
    throw std::invalid_argument("goal or start state out of range");
  }
}

}  // namespace

EnumerationResult enumerate_objective(const ObjectiveQuery& query, int t_max, double accuracy,
                                      bool forced_stop) {
  check_query(query);
  if (t_max < 0) throw std::invalid_argument("t_max must be non-negative");
  const TabularMdp& mdp = *query.mdp;
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  const double p = query.prior.continue_prob;
  const double alpha = query.entropy_weight;

  Eigen::VectorXd kl_pi(n_states);
  for (StateId s = 0; s < n_states; ++s) kl_pi(s) = policy_kl(*query.policy, s);

  EnumerationResult out;
  out.horizon = t_max;
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n_states);
  weight(query.start) = 1.0;
  double bound = 0.0;  // largest magnitude of a single step's contribution
  double c_max = 0.0;
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) {
      const double c = query.qpost->continue_prob(s, a);
      const double ll = std::log(query.model->prob(s, a, query.goal));
      bound = std::max(bound, std::abs((1.0 - c) * ll - bern_kl(c, p)) + alpha * kl_pi(s));
      c_max = std::max(c_max, c);
    }
  }

  for (int t = 0; t <= t_max; ++t) {
    const bool last = forced_stop && t == t_max;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n_states);
    for (StateId s = 0; s < n_states; ++s) {
      if (weight(s) == 0.0) continue;
      for (ActionId a = 0; a < n_actions; ++a) {
        const double w = weight(s) * query.policy->probs(s, a);
        if (w == 0.0) continue;
        ++out.trajectories_enumerated;
        const double ll = std::log(query.model->prob(s, a, query.goal));
        const double c = last ? 0.0 : query.qpost->continue_prob(s, a);
        const double reward = last ? ll : (1.0 - c) * ll - bern_kl(c, p);
        const double step = reward - alpha * kl_pi(s);
        out.objective_F += w * step;
        const auto row = mdp.transition().row(s, a);
        for (StateId sn = 0; sn < n_states; ++sn) next(sn) += w * c * row[sn];
      }
    }
    weight = std::move(next);
  }
  if (!std::isfinite(out.objective_F)) throw std::domain_error("objective is not finite");
  out.tail_bound = forced_stop ? 0.0 : weight.sum() * bound / (1.0 - c_max);
  if (out.tail_bound > accuracy) {
    throw std::runtime_error("truncation tail bound " + std::to_string(out.tail_bound) +
                             " exceeds the requested accuracy at T_max = " + std::to_string(t_max));
  }
  return out;
}

EnumerationResult log_marginal_outcome(const TabularMdp& mdp, const DynamicsModel& model,
                                       const TimePrior& prior, StateId goal, StateId start,
                                       int t_max, bool forced_stop) {
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  if (goal < 0 || goal >= n_states || start < 0 || start >= n_states) {
    throw std::invalid_argument("goal or start state out of range");
  }
  const double p = prior.continue_prob;
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(n_states);
  dist(start) = 1.0;
  double marginal = 0.0;
  double time_mass = 1.0;  // p^t
  EnumerationResult out;
  out.horizon = t_max;
  for (int t = 0; t <= t_max; ++t) {
    const double p_t = (forced_stop && t == t_max) ? time_mass : time_mass * (1.0 - p);
    double reach = 0.0;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n_states);
    for (StateId s = 0; s < n_states; ++s) {
      if (dist(s) == 0.0) continue;
      for (ActionId a = 0; a < n_actions; ++a) {
        const double w = dist(s) / n_actions;
        ++out.trajectories_enumerated;
        reach += w * model.prob(s, a, goal);
        const auto row = mdp.transition().row(s, a);
        for (StateId sn = 0; sn < n_states; ++sn) next(sn) += w * row[sn];
      }
    }
    marginal += p_t * reach;
    dist = std::move(next);
    time_mass *= p;
  }
  out.tail_bound = forced_stop ? 0.0 : time_mass;
  if (!(marginal > 0.0)) {
    throw std::domain_error("outcome probability is zero: log marginal is -infinity (goal " +
                            std::to_string(goal) + " unreachable from state " +
                            std::to_string(start) + ")");
  }
  out.log_marginal = std::log(marginal);
  out.objective_F = *out.log_marginal;
  return out;
}

KlIdentity verify_kl_identity(const ObjectiveQuery& query, int t_max) {
  check_query(query);
  const TabularMdp& mdp = *query.mdp;
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  if (n_states > 4 || n_actions > 3 || t_max > 8 || t_max < 0) {
    throw std::invalid_argument("instance too large for literal enumeration (need <= 4 states, "
                                "<= 3 actions, T_max <= 8)");
  }
  if (std::pow(static_cast<double>(n_states * n_actions), t_max + 1) > 5e7) {
    throw std::invalid_argument("instance too large for literal enumeration");
  }
  if (query.entropy_weight != 1.0) {
    throw std::invalid_argument("the KL identity holds for entropy_weight = 1");
  }
  const double log_p = std::log(query.prior.continue_prob);
  const double log_1mp = std::log1p(-query.prior.continue_prob);
  const double log_u = -std::log(static_cast<double>(n_actions));

  double cross = 0.0;  // sum q (log q - log joint)
  double evidence = 0.0;
  std::int64_t count = 0;

  // lq is -inf on branches q cannot produce; they still feed the evidence.
  std::function<void(int, StateId, double, double)> walk = [&](int t, StateId s, double lq,
                                                               double lj) {
    for (ActionId a = 0; a < n_actions; ++a) {
      const double pi = query.policy->probs(s, a);
      const double lq_a = pi > 0.0 ? lq + std::log(pi) : -std::numeric_limits<double>::infinity();
      const double lj_a = lj + log_u;
      const double c = query.qpost->continue_prob(s, a);
      const bool last = t == t_max;
      const double lq_stop = lq_a + (last ? 0.0 : std::log1p(-c));
      const double lj_stop = lj_a + (last ? 0.0 : log_1mp) + std::log(query.model->prob(s, a, query.goal));
      ++count;
      evidence += std::exp(lj_stop);
      if (std::isfinite(lq_stop)) cross += std::exp(lq_stop) * (lq_stop - lj_stop);
      if (last) continue;
      const auto row = mdp.transition().row(s, a);
      for (StateId sn = 0; sn < n_states; ++sn) {
        if (row[sn] == 0.0) continue;
        const double lp = std::log(row[sn]);
        walk(t + 1, sn, lq_a + std::log(c) + lp, lj_a + log_p + lp);
      }
    }
  };
  walk(0, query.start, 0.0, 0.0);
  if (!(evidence > 0.0)) throw std::domain_error("outcome has zero probability under the prior");

  KlIdentity out;
  out.trajectories = count;
  out.kl_direct = cross + std::log(evidence);
  const double f = enumerate_objective(query, t_max, 1e300, true).objective_F;
  const double log_c =
      *log_marginal_outcome(mdp, *query.model, query.prior, query.goal, query.start, t_max, true)
           .log_marginal;
  out.neg_F_plus_C = -f + log_c;
  return out;
}

QcontReport verify_optimal_qcont(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                                 const DynamicsModel& model, const TabularMdp& mdp, StateId goal,
                                 const TimePrior& prior, double entropy_weight,
                                 const TimePosterior& closed_form, double grid_step) {
  if (!(grid_step > 0.0 && grid_step < 0.5)) throw std::invalid_argument("grid step out of range");
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  const int n_grid = static_cast<int>(std::lround(1.0 / grid_step)) - 1;

  Eigen::VectorXd v(n_states);
  for (StateId s = 0; s < n_states; ++s) {
    double e = 0.0;
    for (ActionId a = 0; a < n_actions; ++a) e += policy.probs(s, a) * q_values(s, a);
    v(s) = e - entropy_weight * policy_kl(policy, s);
  }

  QcontReport report;
  report.grid_step = grid_step;
  report.max_second_difference = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  std::vector<double> objective(n_grid);
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) {
      const auto row = mdp.transition().row(s, a);
      double ev = 0.0;
      for (StateId sn = 0; sn < n_states; ++sn) ev += row[sn] * v(sn);
      const double ll = std::log(model.prob(s, a, goal));
      int best = 0;
      for (int i = 0; i < n_grid; ++i) {
        const double c = (i + 1) * grid_step;
        objective[i] = (1.0 - c) * ll - bern_kl(c, prior.continue_prob) + c * ev;
        scale = std::max(scale, std::abs(objective[i]));
        if (objective[i] > objective[best]) best = i;
      }
      for (int i = 1; i + 1 < n_grid; ++i) {
        report.max_second_difference = std::max(
            report.max_second_difference, objective[i - 1] - 2.0 * objective[i] + objective[i + 1]);
      }
      const double gap = std::abs(closed_form.continue_prob(s, a) - (best + 1) * grid_step);
      report.max_argmax_gap = std::max(report.max_argmax_gap, gap);
    }
  }
  report.ok = report.max_argmax_gap <= grid_step * (1.0 + 1e-9) &&
              report.max_second_difference <= 1e-12 * (1.0 + scale);
  return report;
}

double fixed_time_objective_enumerated(const TabularMdp& mdp, const DynamicsModel& model,
                                       const std::vector<PolicyTable>& policies, StateId goal,
                                       StateId start, double entropy_weight) {
  const int t_star = static_cast<int>(policies.size());
  if (t_star < 1) throw std::invalid_argument("need at least one policy layer");
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  double total = 0.0;
  std::function<void(int, StateId, double, double)> walk = [&](int t, StateId s, double prob,
                                                               double kl_sum) {
    const double kl_here = kl_sum + policy_kl(policies[t], s);
    for (ActionId a = 0; a < n_actions; ++a) {
      const double pa = prob * policies[t].probs(s, a);
      if (pa == 0.0) continue;
      if (t == t_star - 1) {
        total += pa * (std::log(model.prob(s, a, goal)) - entropy_weight * kl_here);
        continue;
      }
      const auto row = mdp.transition().row(s, a);
      for (StateId sn = 0; sn < n_states; ++sn) {
        if (row[sn] > 0.0) walk(t + 1, sn, pa * row[sn], kl_here);
      }
    }
  };
  walk(0, start, 1.0, 0.0);
  return total;
}

}  // namespace odrl
