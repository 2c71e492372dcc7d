#pragma once

#include <span>
#include <vector>

#include "odrl/mdp.hpp"

namespace odrl {

class GridWorld;
struct Transition;

enum class ModelMode {
  mixing,    // running average toward the true dynamics
  counting,  // Dirichlet-smoothed maximum likelihood from observed transitions
  frozen,    // never updated
};

/// Estimated transition model p_hat(s' | s, a). Supplies the log-likelihood of the outcome
/// used by the derived reward. Updates mutate in place; the free functions below return copies.
class DynamicsModel {
 public:
  /// Every row uniform over next states.
  static DynamicsModel uniform(int n_states, int n_actions, ModelMode mode, double mix_rate = 0.01,
                               double smoothing = 1e-3);
  /// Frozen copy of a given tensor (e.g. the exact dynamics).
  static DynamicsModel frozen(TransitionTensor estimate);
  /// Frozen model that spreads each row uniformly over the slip neighbourhood of the state,
  /// ignoring the action; Dirichlet-smoothed so every entry stays positive.
  static DynamicsModel neighbor_uniform(const GridWorld& world, double smoothing = 1e-3);

  ModelMode mode() const { return mode_; }
  double mix_rate() const { return mix_rate_; }
  double smoothing() const { return smoothing_; }
  int num_states() const { return estimate_.num_states(); }
  int num_actions() const { return estimate_.num_actions(); }
  const TransitionTensor& estimate() const { return estimate_; }

  /// est <- (1 - mix_rate) * est + mix_rate * truth. Requires mixing mode.
  void apply_mixing(const TabularMdp& truth);
  /// Adds the (s, a, s') counts of `batch` and refreshes the touched rows. Requires counting mode.
  void add_counts(std::span<const Transition> batch);
  void add_count(StateId s, ActionId a, StateId next);

  double prob(StateId s, ActionId a, StateId next) const { return estimate_(s, a, next); }
  /// Natural log of est(g | s, a). Throws std::domain_error when the entry is zero, which can
  /// only happen with smoothing = 0.
  double log_likelihood(StateId s, ActionId a, StateId goal) const;

  /// Replaces the estimate wholesale, re-checking row sums.
  void set_estimate(TransitionTensor estimate);

 private:
  DynamicsModel(TransitionTensor estimate, ModelMode mode, double mix_rate, double smoothing);
  void refresh_row(StateId s, ActionId a);

  TransitionTensor estimate_;
  ModelMode mode_;
  double mix_rate_;
  double smoothing_;
  std::vector<double> counts_;      // counting mode only, same layout as the tensor
  std::vector<double> row_totals_;  // counting mode only, one per (s, a)
};

DynamicsModel init_uniform(int n_states, int n_actions, ModelMode mode = ModelMode::mixing,
                           double mix_rate = 0.01, double smoothing = 1e-3);
DynamicsModel update_mixing(DynamicsModel model, const TabularMdp& truth);
DynamicsModel update_counts(DynamicsModel model, std::span<const Transition> batch);

}  // namespace odrl
