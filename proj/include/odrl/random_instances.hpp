#pragma once

#include <random>

#include "odrl/dynamics_model.hpp"
#include "odrl/mdp.hpp"
#include "odrl/variational_time.hpp"

namespace odrl {

/// Random dense MDP: rows are normalized exponential draws; initial distribution is a point
/// mass on state 0.
TabularMdp random_mdp(int n_states, int n_actions, std::mt19937_64& rng);

/// Random row-stochastic tensor with every entry bounded away from zero.
TransitionTensor random_tensor(int n_states, int n_actions, std::mt19937_64& rng);

/// Frozen model with random positive rows.
DynamicsModel random_model(int n_states, int n_actions, std::mt19937_64& rng);

/// Continuation table with entries uniform in [lo, hi].
TimePosterior random_posterior(int n_states, int n_actions, double lo, double hi,
                               std::mt19937_64& rng);

/// Softmax of normal logits with the given spread.
PolicyTable random_softmax_policy(int n_states, int n_actions, double spread, std::mt19937_64& rng);

}  // namespace odrl
