#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "odrl/mdp.hpp"

namespace odrl {

class DynamicsModel;

/// Entries of continuation tables are kept inside [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-9;

double sigma(double x);
/// Log-odds. Throws std::domain_error for p outside (0, 1).
double sigma_inv(double p);
double clamp_open_unit(double p);

/// KL(Bernoulli(q0) || Bernoulli(p0)) where q0, p0 are the probabilities of "continue".
/// Throws std::domain_error unless both arguments lie strictly inside (0, 1).
double bernoulli_kl(double q0, double p0);

/// Stationary geometric prior over the termination time: p(continue) at every step.
struct TimePrior {
  double continue_prob = 0.99;

  /// Throws std::invalid_argument unless 0 < p < 1.
  static TimePrior make(double continue_prob);
};

/// q(continue | s, a) for every state-action pair.
struct TimePosterior {
  Eigen::MatrixXd continue_prob;

  static TimePosterior constant(int n_states, int n_actions, double value);
  /// Throws std::invalid_argument if an entry is outside (0, 1), or above `cap` when given.
  void check(double cap = 1.0) const;
  double max_entry() const { return continue_prob.maxCoeff(); }
};

/// Distribution over termination times 0..T_max with the remaining mass lumped in `tail_mass`.
struct DiscreteTimeDist {
  std::vector<double> pmf;
  double tail_mass = 0.0;

  int horizon() const { return static_cast<int>(pmf.size()) - 1; }
  /// q(T >= t) computed from the pmf and tail.
  double survival(int t) const;
};

/// pmf[t] = (1 - c[t]) * prod_{i < t} c[i], where c[i] is the continuation probability of
/// decision i + 1. Requires at least t_max + 1 entries.
DiscreteTimeDist time_dist_from_continue(std::span<const double> continue_seq, int t_max);
DiscreteTimeDist geometric_time_dist(const TimePrior& prior, int t_max);

/// prod_{i < t} c[i]: survival computed directly from the continuation sequence.
double survival_from_continue(std::span<const double> continue_seq, int t);

/// Smallest horizon T with prior.continue_prob^T below `tail`.
int default_time_horizon(const TimePrior& prior, double tail = 1e-10);

struct TimeKl {
  double direct = 0.0;      // sum over the pmf plus the lumped tail
  double decomposed = 0.0;  // survival-weighted Bernoulli KLs
};

/// KL between a continuation-sequence time distribution and the geometric prior, both
/// truncated at t_max with the remaining mass lumped into one outcome.
TimeKl kl_time_dists(std::span<const double> continue_seq, const TimePrior& prior, int t_max);

/// Soft state values V(s) = sum_a pi(a|s) Q(s,a) - alpha * KL(pi(.|s) || uniform).
Eigen::VectorXd soft_state_values(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                                  double entropy_weight);

/// Closed-form optimal continuation probabilities for the current policy and Q:
///   q(s,a) = sigma( E_{s'~P(.|s,a)}[V(s')] - log p_hat(g|s,a) + logit(prior) ),
/// with V the soft value of `policy` under `q_values`. The expectation uses `dynamics`, the
/// same tensor the backup bootstraps through; the log-likelihood comes from `model`.
/// Throws std::domain_error on non-finite intermediates.
TimePosterior optimal_continue_prob(const QTable& q_values, const PolicyTable& policy,
                                    const DynamicsModel& model, const TransitionTensor& dynamics,
                                    StateId goal, const TimePrior& prior, double entropy_weight);

}  // namespace odrl
