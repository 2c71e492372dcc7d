#include "odrl/variational_time.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "odrl/dynamics_model.hpp"

namespace odrl {

double sigma(double x) {
  // Two branches keep exp() from overflowing for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigma_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("sigma_inv requires p in (0, 1), got " + std::to_string(p));
  }
  return std::log(p) - std::log1p(-p);
}

double clamp_open_unit(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

double bernoulli_kl(double q0, double p0) {
  if (!(q0 > 0.0 && q0 < 1.0) || !(p0 > 0.0 && p0 < 1.0)) {
    throw std::domain_error("bernoulli_kl requires arguments in (0, 1)");
  }
  const double kl = q0 * (std::log(q0) - std::log(p0)) +
                    (1.0 - q0) * (std::log1p(-q0) - std::log1p(-p0));
  return std::max(kl, 0.0);
}

TimePrior TimePrior::make(double continue_prob) {
  if (!(continue_prob > 0.0 && continue_prob < 1.0)) {
    throw std::invalid_argument("prior continue probability must lie in (0, 1)");
  }
  return TimePrior{continue_prob};
}

TimePosterior TimePosterior::constant(int n_states, int n_actions, double value) {
  return {Eigen::MatrixXd::Constant(n_states, n_actions, value)};
}

void TimePosterior::check(double cap) const {
  for (Eigen::Index s = 0; s < continue_prob.rows(); ++s) {
    for (Eigen::Index a = 0; a < continue_prob.cols(); ++a) {
      const double c = continue_prob(s, a);
      if (!(c > 0.0 && c < 1.0)) {
        throw std::invalid_argument("continuation probability outside (0, 1) at state " +
                                    std::to_string(s));
      }
      if (c > cap) {
        throw std::invalid_argument("continuation probability above the prior cap at state " +
                                    std::to_string(s));
      }
    }
  }
}

double DiscreteTimeDist::survival(int t) const {
  double mass = tail_mass;
  for (int i = static_cast<int>(pmf.size()) - 1; i >= t; --i) mass += pmf[i];
  return mass;
}

DiscreteTimeDist time_dist_from_continue(std::span<const double> continue_seq, int t_max) {
  if (t_max < 0 || continue_seq.size() < static_cast<std::size_t>(t_max) + 1) {
    throw std::invalid_argument("continuation sequence needs t_max + 1 entries");
  }
  DiscreteTimeDist out;
  out.pmf.resize(t_max + 1);
  double survive = 1.0;
  for (int t = 0; t <= t_max; ++t) {
    out.pmf[t] = survive * (1.0 - continue_seq[t]);
    survive *= continue_seq[t];
  }
  out.tail_mass = survive;
  return out;
}

DiscreteTimeDist geometric_time_dist(const TimePrior& prior, int t_max) {
  std::vector<double> seq(static_cast<std::size_t>(t_max) + 1, prior.continue_prob);
  return time_dist_from_continue(seq, t_max);
}

double survival_from_continue(std::span<const double> continue_seq, int t) {
  double prod = 1.0;
  for (int i = 0; i < t; ++i) prod *= continue_seq[i];
  return prod;
}

int default_time_horizon(const TimePrior& prior, double tail) {
  return static_cast<int>(std::ceil(std::log(tail) / std::log(prior.continue_prob)));
}

TimeKl kl_time_dists(std::span<const double> continue_seq, const TimePrior& prior, int t_max) {
  const DiscreteTimeDist q = time_dist_from_continue(continue_seq, t_max);
  const DiscreteTimeDist p = geometric_time_dist(prior, t_max);
  TimeKl out;
  auto term = [](double qi, double pi) { return qi > 0.0 ? qi * (std::log(qi) - std::log(pi)) : 0.0; };
  for (int t = 0; t <= t_max; ++t) out.direct += term(q.pmf[t], p.pmf[t]);
  out.direct += term(q.tail_mass, p.tail_mass);

  double survive = 1.0;
  for (int t = 0; t <= t_max; ++t) {
    out.decomposed += survive * bernoulli_kl(continue_seq[t], prior.continue_prob);
    survive *= continue_seq[t];
  }
  return out;
}

Eigen::VectorXd soft_state_values(const Eigen::MatrixXd& q_values, const PolicyTable& policy,
                                  double entropy_weight) {
  const Eigen::VectorXd expected = (policy.probs.array() * q_values.array()).rowwise().sum();
  return expected - entropy_weight * kl_to_uniform(policy);
}

TimePosterior optimal_continue_prob(const QTable& q_values, const PolicyTable& policy,
                                    const DynamicsModel& model, const TransitionTensor& dynamics,
                                    StateId goal, const TimePrior& prior, double entropy_weight) {
  const int n_states = dynamics.num_states();
  const int n_actions = dynamics.num_actions();
  if (!q_values.values.allFinite()) throw std::domain_error("Q table has non-finite entries");
  const Eigen::VectorXd v = soft_state_values(q_values.values, policy, entropy_weight);
  const double prior_logit = sigma_inv(prior.continue_prob);

  TimePosterior out{Eigen::MatrixXd(n_states, n_actions)};
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) {
      const auto row = dynamics.row(s, a);
      double next_value = 0.0;
      for (StateId sn = 0; sn < n_states; ++sn) next_value += row[sn] * v(sn);
      const double log_lik = model.log_likelihood(s, a, goal);
      const double logit = next_value - log_lik + prior_logit;
      if (!std::isfinite(logit)) {
        throw std::domain_error("non-finite continuation logit at state " + std::to_string(s) +
                                ", action " + std::to_string(a));
      }
      out.continue_prob(s, a) = clamp_open_unit(sigma(logit));
    }
  }
  return out;
}

}  // namespace odrl
