#include "odrl/fixed_time.hpp"

#include <cmath>
#include <stdexcept>

namespace odrl {

std::vector<PolicyTable> FixedTimeValue::greedy_policies() const {
  std::vector<PolicyTable> out;
  out.reserve(q_layers.size());
  for (const auto& q : q_layers) out.push_back(PolicyTable::greedy(q));
  return out;
}

FixedTimeValue fixed_time_solve(const TabularMdp& mdp, const DynamicsModel& model, StateId goal,
                                int t_star, const SolverConfig& cfg) {
  if (t_star < 1) throw std::invalid_argument("t_star must be at least 1");
  if (!(cfg.entropy_weight > 0.0)) throw std::invalid_argument("entropy_weight must be positive");
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();
  const double alpha = cfg.entropy_weight;
  const double log_prior = -std::log(static_cast<double>(n_actions));

  FixedTimeValue out;
  out.q_layers.resize(t_star);
  out.v_layers.resize(t_star);
  out.policies.resize(t_star);

  auto soften = [&](int t) {
    const Eigen::MatrixXd& q = out.q_layers[t];
    Eigen::VectorXd v(n_states);
    Eigen::MatrixXd probs(n_states, n_actions);
    for (StateId s = 0; s < n_states; ++s) {
      const double top = q.row(s).maxCoeff();
      const Eigen::ArrayXd w = ((q.row(s).array() - top) / alpha).exp().transpose();
      const double total = w.sum();
      v(s) = top + alpha * (log_prior + std::log(total));
      probs.row(s) = (w / total).transpose().matrix();
    }
    out.v_layers[t] = std::move(v);
    out.policies[t] = PolicyTable{std::move(probs)};
  };

  out.q_layers[t_star - 1] = log_likelihood_table(model, goal);
  soften(t_star - 1);
  for (int t = t_star - 2; t >= 0; --t) {
    Eigen::MatrixXd q(n_states, n_actions);
    const Eigen::VectorXd& v_next = out.v_layers[t + 1];
    for (StateId s = 0; s < n_states; ++s) {
      for (ActionId a = 0; a < n_actions; ++a) {
        const auto row = mdp.transition().row(s, a);
        double acc = 0.0;
        for (StateId sn = 0; sn < n_states; ++sn) acc += row[sn] * v_next(sn);
        q(s, a) = acc;
      }
    }
    out.q_layers[t] = std::move(q);
    soften(t);
  }
  return out;
}

}  // namespace odrl
