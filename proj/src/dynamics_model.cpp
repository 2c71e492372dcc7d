#include "odrl/dynamics_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "odrl/gridworld.hpp"
#include "odrl/replay_buffer.hpp"

namespace odrl {

DynamicsModel::DynamicsModel(TransitionTensor estimate, ModelMode mode, double mix_rate,
                             double smoothing)
    : estimate_(std::move(estimate)), mode_(mode), mix_rate_(mix_rate), smoothing_(smoothing) {
  if (!(mix_rate > 0.0 && mix_rate <= 1.0)) {
    throw std::invalid_argument("mix_rate must lie in (0, 1]");
  }
  if (!(smoothing >= 0.0)) throw std::invalid_argument("smoothing must be non-negative");
  estimate_.check_simplex();
  if (mode_ == ModelMode::counting) {
    counts_.assign(estimate_.data().size(), 0.0);
    row_totals_.assign(static_cast<std::size_t>(num_states()) * num_actions(), 0.0);
  }
}

DynamicsModel DynamicsModel::uniform(int n_states, int n_actions, ModelMode mode, double mix_rate,
                                     double smoothing) {
  TransitionTensor t(n_states, n_actions,
                     std::vector<double>(static_cast<std::size_t>(n_states) * n_actions * n_states,
                                         1.0 / n_states));
  return DynamicsModel(std::move(t), mode, mix_rate, smoothing);
}

DynamicsModel DynamicsModel::frozen(TransitionTensor estimate) {
  return DynamicsModel(std::move(estimate), ModelMode::frozen, 1.0, 0.0);
}

DynamicsModel DynamicsModel::neighbor_uniform(const GridWorld& world, double smoothing) {
  const int n = world.num_states();
  const int n_actions = world.mdp().num_actions();
  TransitionTensor t(n, n_actions);
  for (StateId s = 0; s < n; ++s) {
    const auto targets = world.slip_targets(s);
    const double denom = static_cast<double>(targets.size()) + smoothing * n;
    for (ActionId a = 0; a < n_actions; ++a) {
      for (StateId sn = 0; sn < n; ++sn) t(s, a, sn) = smoothing / denom;
      for (StateId sn : targets) t(s, a, sn) += 1.0 / denom;
    }
  }
  return DynamicsModel(std::move(t), ModelMode::frozen, 1.0, smoothing);
}

void DynamicsModel::apply_mixing(const TabularMdp& truth) {
  if (mode_ != ModelMode::mixing) throw std::logic_error("apply_mixing requires mixing mode");
  if (truth.num_states() != num_states() || truth.num_actions() != num_actions()) {
    throw std::invalid_argument("mixing target has mismatched dimensions");
  }
  for (StateId s = 0; s < num_states(); ++s) {
    for (ActionId a = 0; a < num_actions(); ++a) {
      auto row = estimate_.row(s, a);
      const auto target = truth.transition().row(s, a);
      for (StateId sn = 0; sn < num_states(); ++sn) {
        row[sn] = (1.0 - mix_rate_) * row[sn] + mix_rate_ * target[sn];
      }
    }
  }
}

void DynamicsModel::refresh_row(StateId s, ActionId a) {
  const std::size_t sa = static_cast<std::size_t>(s) * num_actions() + a;
  const double denom = row_totals_[sa] + smoothing_ * num_states();
  auto row = estimate_.row(s, a);
  const double* counts = counts_.data() + sa * num_states();
  if (denom <= 0.0) {
    // Unsmoothed and unobserved: keep the row uniform until data arrives.
    for (StateId sn = 0; sn < num_states(); ++sn) row[sn] = 1.0 / num_states();
    return;
  }
  for (StateId sn = 0; sn < num_states(); ++sn) row[sn] = (counts[sn] + smoothing_) / denom;
}

void DynamicsModel::add_count(StateId s, ActionId a, StateId next) {
  if (mode_ != ModelMode::counting) throw std::logic_error("add_count requires counting mode");
  const std::size_t sa = static_cast<std::size_t>(s) * num_actions() + a;
  counts_[sa * num_states() + next] += 1.0;
  row_totals_[sa] += 1.0;
  refresh_row(s, a);
}

void DynamicsModel::add_counts(std::span<const Transition> batch) {
  if (mode_ != ModelMode::counting) throw std::logic_error("add_counts requires counting mode");
  std::vector<char> touched(row_totals_.size(), 0);
  for (const Transition& tr : batch) {
    const std::size_t sa = static_cast<std::size_t>(tr.s) * num_actions() + tr.a;
    counts_[sa * num_states() + tr.s_next] += 1.0;
    row_totals_[sa] += 1.0;
    touched[sa] = 1;
  }
  for (std::size_t sa = 0; sa < touched.size(); ++sa) {
    if (touched[sa]) {
      refresh_row(static_cast<StateId>(sa / num_actions()), static_cast<ActionId>(sa % num_actions()));
    }
  }
}

double DynamicsModel::log_likelihood(StateId s, ActionId a, StateId goal) const {
  const double p = estimate_(s, a, goal);
  if (!(p > 0.0)) {
    throw std::domain_error("zero model likelihood for goal " + std::to_string(goal) +
                            " from state " + std::to_string(s) + ", action " + std::to_string(a) +
                            " (unsmoothed model)");
  }
  return std::log(p);
}

void DynamicsModel::set_estimate(TransitionTensor estimate) {
  if (estimate.num_states() != num_states() || estimate.num_actions() != num_actions()) {
    throw std::invalid_argument("replacement estimate has mismatched dimensions");
  }
  estimate.check_simplex();
  estimate_ = std::move(estimate);
}

DynamicsModel init_uniform(int n_states, int n_actions, ModelMode mode, double mix_rate,
                           double smoothing) {
  return DynamicsModel::uniform(n_states, n_actions, mode, mix_rate, smoothing);
}

DynamicsModel update_mixing(DynamicsModel model, const TabularMdp& truth) {
  model.apply_mixing(truth);
  return model;
}

DynamicsModel update_counts(DynamicsModel model, std::span<const Transition> batch) {
  model.add_counts(batch);
  return model;
}

}  // namespace odrl
