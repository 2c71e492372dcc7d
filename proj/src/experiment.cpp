#include "odrl/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <random>

#include "odrl/csv_io.hpp"
#include "odrl/sampling.hpp"

namespace odrl {

DynamicsModel make_solver_model(const RunConfig& cfg, const GridWorld& world) {
  const int n = world.num_states();
  const int n_actions = world.mdp().num_actions();
  switch (cfg.model_source) {
    case ModelSource::mixing:
      return DynamicsModel::uniform(n, n_actions, ModelMode::mixing, cfg.mix_rate, cfg.model_smoothing);
    case ModelSource::frozen_uniform:
      return DynamicsModel::frozen(DynamicsModel::uniform(n, n_actions, ModelMode::frozen).estimate());
    case ModelSource::neighbor_uniform:
      return DynamicsModel::neighbor_uniform(world, cfg.model_smoothing);
    case ModelSource::exact: {
      TransitionTensor t = world.mdp().transition();
      const double eps = cfg.model_smoothing;
      for (StateId s = 0; s < n; ++s) {
        for (ActionId a = 0; a < n_actions; ++a) {
          for (StateId sn = 0; sn < n; ++sn) t(s, a, sn) = (t(s, a, sn) + eps) / (1.0 + eps * n);
        }
      }
      return DynamicsModel::frozen(std::move(t));
    }
  }
  throw std::logic_error("unhandled model source");
}

namespace {

Eigen::VectorXd policy_weighted(const PolicyTable& policy, const Eigen::MatrixXd& table) {
  return (policy.probs.array() * table.array()).rowwise().sum();
}

}  // namespace

SolveOutput run_solve(const RunConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveOutput out{build_gridworld(cfg.world), std::nullopt, std::nullopt, PolicyTable{}, 0.0,
                  {}, {}, {}, {}, {}, 0.0};
  const GridWorld& world = out.world;
  const TabularMdp& mdp = world.mdp();
  const StateId start = world.start_state();
  const StateId goal = world.goal_state();
  const int n = world.num_states();

  out.sparse_reward = Eigen::VectorXd::Zero(n);
  out.sparse_reward(goal) = 1.0;
  DynamicsModel model = make_solver_model(cfg, world);

  if (cfg.solver.variant == Variant::fixed_time) {
    if (cfg.model_source == ModelSource::mixing) {
      // A single solve has no iterations to mix over; use the model reached after the
      // configured outer-iteration budget.
      for (int i = 0; i < cfg.solver.max_outer_iters; ++i) model.apply_mixing(mdp);
    }
    FixedTimeValue ft = fixed_time_solve(mdp, model, goal, cfg.solver.t_star, cfg.solver);
    const Eigen::MatrixXd ll = log_likelihood_table(model, goal);
    out.greedy = PolicyTable::greedy(ft.q_layers.front());
    out.reward_init = policy_weighted(ft.policies.back(), ll);
    out.reward_final = out.reward_init;
    out.value_final = ft.v_layers.front();
    out.q_cont_final = Eigen::VectorXd::Zero(n);
    // Success: the time-indexed greedy policy sits on the goal at step t_star.
    std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
    const auto greedy = ft.greedy_policies();
    int hits = 0;
    for (int i = 0; i < cfg.eval_rollouts; ++i) {
      StateId s = start;
      for (int t = 0; t < ft.t_star(); ++t) {
        const ActionId a = sample_index(greedy[t].probs.row(s), rng);
        s = sample_index(mdp.transition().row(s, a), rng);
      }
      hits += s == goal ? 1 : 0;
    }
    out.greedy_success = static_cast<double>(hits) / cfg.eval_rollouts;
    out.fixed_time = std::move(ft);
  } else {
    ModelSchedule schedule = cfg.model_source == ModelSource::mixing
                                 ? ModelSchedule::mixing(std::move(model), mdp)
                                 : ModelSchedule::fixed(std::move(model));
    const PolicyTable init = random_policy(n, mdp.num_actions(), seed);
    auto observer = [&](int, const PolicyTable&, const QTable& q) {
      return goal_hit_probability(mdp, PolicyTable::greedy(q.values), start, goal, cfg.eval_horizon);
    };
    PolicyIterationResult res =
        policy_iteration(mdp, goal, cfg.solver, std::move(schedule), init, observer);
    out.greedy = PolicyTable::greedy(res.q.values);
    out.greedy_success = goal_success_rate(mdp, out.greedy, start, goal, cfg.eval_horizon,
                                           cfg.eval_rollouts, seed ^ 0x2545f4914f6cdd1dULL);
    out.reward_init = policy_weighted(res.policy, res.first_reward);
    out.reward_final = policy_weighted(res.policy, res.final_reward);
    out.value_final = res.final_values;
    out.q_cont_final = policy_weighted(res.policy, res.qpost.continue_prob);
    out.iteration = std::move(res);
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<std::string> write_solve_outputs(const SolveOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto path = [&](const std::string& name) {
    files.push_back(name);
    return (std::filesystem::path(dir) / name).string();
  };
  if (out.iteration) {
    write_iteration_csv(path("iterations.csv"), out.iteration->log);
    write_state_action_csv(path("q_table.csv"), out.iteration->q.values, "q");
    write_state_action_csv(path("q_cont.csv"), out.iteration->qpost.continue_prob, "continue_prob");
    write_state_action_csv(path("policy.csv"), out.iteration->policy.probs, "prob");
  }
  if (out.fixed_time) {
    for (int t = 0; t < out.fixed_time->t_star(); ++t) {
      write_state_action_csv(path("q_layer_" + std::to_string(t) + ".csv"),
                             out.fixed_time->q_layers[t], "q");
    }
  }
  write_heatmap_csv(path("heatmap_sparse_reward.csv"), out.world, out.sparse_reward);
  write_heatmap_csv(path("heatmap_reward_init.csv"), out.world, out.reward_init);
  write_heatmap_csv(path("heatmap_reward_final.csv"), out.world, out.reward_final);
  write_heatmap_csv(path("heatmap_value_final.csv"), out.world, out.value_final);
  write_heatmap_csv(path("heatmap_q_cont_final.csv"), out.world, out.q_cont_final);
  write_state_values_csv(path("values.csv"), out.value_final);
  return files;
}

}  // namespace odrl
