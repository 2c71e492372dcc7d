#include "odrl/random_instances.hpp"

#include <cmath>

namespace odrl {

TransitionTensor random_tensor(int n_states, int n_actions, std::mt19937_64& rng) {
  std::exponential_distribution<double> draw(1.0);
  TransitionTensor t(n_states, n_actions);
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (StateId sn = 0; sn < n_states; ++sn) total += (t(s, a, sn) = 0.05 + draw(rng));
      for (StateId sn = 0; sn < n_states; ++sn) t(s, a, sn) /= total;
    }
  }
  return t;
}

TabularMdp random_mdp(int n_states, int n_actions, std::mt19937_64& rng) {
  std::vector<double> init(n_states, 0.0);
  init[0] = 1.0;
  return TabularMdp(random_tensor(n_states, n_actions, rng), std::move(init));
}

DynamicsModel random_model(int n_states, int n_actions, std::mt19937_64& rng) {
  return DynamicsModel::frozen(random_tensor(n_states, n_actions, rng));
}

TimePosterior random_posterior(int n_states, int n_actions, double lo, double hi,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> draw(lo, hi);
  TimePosterior out{Eigen::MatrixXd(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) out.continue_prob(s, a) = draw(rng);
  }
  return out;
}

PolicyTable random_softmax_policy(int n_states, int n_actions, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, spread);
  PolicyTable out{Eigen::MatrixXd(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) total += (out.probs(s, a) = std::exp(normal(rng)));
    out.probs.row(s) /= total;
  }
  return out;
}

}  // namespace odrl
