#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "odrl/gridworld.hpp"
#include "odrl/mdp.hpp"

namespace odrl {
namespace {

TabularMdp line_mdp() {
  // 0 -> 1 -> 2 -> 2 under action 0, action 1 stays put.
  TransitionTensor t(3, 2);
  t(0, 0, 1) = t(1, 0, 2) = t(2, 0, 2) = 1.0;
  t(0, 1, 0) = t(1, 1, 1) = t(2, 1, 2) = 1.0;
  return TabularMdp(t, {1.0, 0.0, 0.0});
}

TEST(TransitionTensor, RejectsRowsOffTheSimplex) {
  TransitionTensor t(2, 1, {0.5, 0.5, 0.7, 0.2});
  EXPECT_THROW(t.check_simplex(), std::invalid_argument);
  EXPECT_NEAR(t.max_row_error(), 0.1, 1e-15);
  EXPECT_THROW(TabularMdp(t, {1.0, 0.0}), std::invalid_argument);
}

TEST(TabularMdp, RejectsBadInitialDistribution) {
  TransitionTensor t(2, 1, {1.0, 0.0, 0.0, 1.0});
  EXPECT_THROW(TabularMdp(t, {0.6, 0.6}), std::invalid_argument);
  EXPECT_THROW(TabularMdp(t, {1.0}), std::invalid_argument);
}

TEST(GridWorld, OpenEightByEightHas64StatesAndStochasticRows) {
  GridSpec spec;
  spec.slip_prob = 0.1;
  const GridWorld w = build_gridworld(spec);
  EXPECT_EQ(w.num_states(), 64);
  EXPECT_EQ(w.mdp().num_actions(), 4);
  EXPECT_LE(w.mdp().transition().max_row_error(), 1e-12);
}

TEST(GridWorld, SingleCellSelfLoops) {
  GridSpec spec;
  spec.width = spec.height = 1;
  spec.slip_prob = 0.0;
  spec.start_cell = spec.goal_cell = {0, 0};
  const GridWorld w = build_gridworld(spec);
  ASSERT_EQ(w.num_states(), 1);
  for (int a = 0; a < kGridActions; ++a) EXPECT_DOUBLE_EQ(w.mdp().prob(0, a, 0), 1.0);
}

TEST(GridWorld, TwoByTwoSlipRowMatchesHandEnumeration) {
  GridSpec spec;
  spec.width = spec.height = 2;
  spec.slip_prob = 0.5;
  spec.start_cell = {0, 0};
  spec.goal_cell = {1, 1};
  const GridWorld w = build_gridworld(spec);
  // Row-major: 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1). "right" lands on (1,0) with 0.5; the slip
  // branch spreads 0.5 over the four cells of the clipped 3x3 block.
  const StateId s = w.state_of({0, 0});
  const int right = static_cast<int>(GridAction::right);
  EXPECT_NEAR(w.mdp().prob(s, right, w.state_of({0, 0})), 0.125, 1e-15);
  EXPECT_NEAR(w.mdp().prob(s, right, w.state_of({1, 0})), 0.625, 1e-15);
  EXPECT_NEAR(w.mdp().prob(s, right, w.state_of({0, 1})), 0.125, 1e-15);
  EXPECT_NEAR(w.mdp().prob(s, right, w.state_of({1, 1})), 0.125, 1e-15);
}

TEST(GridWorld, VonNeumannSlipSkipsDiagonals) {
  GridSpec spec;
  spec.width = spec.height = 2;
  spec.slip_prob = 0.3;
  spec.neighborhood = SlipNeighborhood::von_neumann;
  spec.goal_cell = {1, 1};
  const GridWorld w = build_gridworld(spec);
  const int up = static_cast<int>(GridAction::up);
  // Bumping the top wall keeps the agent in place; slip picks among self, right and below.
  EXPECT_NEAR(w.mdp().prob(0, up, 0), 0.7 + 0.1, 1e-15);
  EXPECT_NEAR(w.mdp().prob(0, up, 1), 0.1, 1e-15);
  EXPECT_NEAR(w.mdp().prob(0, up, 2), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(w.mdp().prob(0, up, 3), 0.0);
}

TEST(GridWorld, BlockedCellsAreRemovedAndSlipMassRenormalized) {
  GridSpec spec;
  spec.width = 3;
  spec.height = 1;
  spec.blocked_cells = {{1, 0}};
  spec.start_cell = {0, 0};
  spec.goal_cell = {0, 0};
  spec.slip_prob = 0.2;
  const GridWorld w = build_gridworld(spec);
  EXPECT_EQ(w.num_states(), 2);
  EXPECT_EQ(w.state_of({1, 0}), -1);
  const int right = static_cast<int>(GridAction::right);
  EXPECT_DOUBLE_EQ(w.mdp().prob(0, right, 0), 1.0);
}

TEST(GridWorld, RejectsUnreachableGoalAndBadSpecs) {
  GridSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.blocked_cells = {{1, 0}, {1, 1}, {1, 2}};
  spec.start_cell = {0, 0};
  spec.goal_cell = {2, 2};
  EXPECT_THROW(build_gridworld(spec), std::invalid_argument);

  GridSpec slip;
  slip.slip_prob = 1.0;
  EXPECT_THROW(build_gridworld(slip), std::invalid_argument);

  GridSpec outside;
  outside.goal_cell = {8, 0};
  EXPECT_THROW(build_gridworld(outside), std::invalid_argument);

  GridSpec on_wall;
  on_wall.blocked_cells = {{7, 7}};
  EXPECT_THROW(build_gridworld(on_wall), std::invalid_argument);
}

TEST(GridWorld, DynamicsIgnoreTheGoal) {
  GridSpec a = u_shaped_grid_spec();
  GridSpec b = a;
  b.goal_cell = {0, 0};
  EXPECT_EQ(build_gridworld(a).mdp().transition(), build_gridworld(b).mdp().transition());
}

TEST(GridWorld, UShapedLayoutPathDistance) {
  const GridWorld w = build_gridworld(u_shaped_grid_spec());
  EXPECT_EQ(w.num_states(), 54);
  EXPECT_EQ(w.path_distance(w.start_state(), w.goal_state()), 13);
  EXPECT_EQ(w.path_distance(w.goal_state(), w.goal_state()), 0);
}

TEST(Rollout, DeterministicMdpGivesTheSameTrajectoryForAnySeed) {
  const TabularMdp mdp = line_mdp();
  PolicyTable pol{Eigen::MatrixXd::Zero(3, 2)};
  pol.probs.col(0).setOnes();
  const Trajectory a = sample_rollout(mdp, pol, 4, 1);
  const Trajectory b = sample_rollout(mdp, pol, 4, 987654);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.states, (std::vector<StateId>{0, 1, 2, 2, 2}));
}

TEST(Rollout, HorizonZeroIsASingleState) {
  const Trajectory t = sample_rollout(line_mdp(), PolicyTable::uniform(3, 2), 0, 3);
  EXPECT_EQ(t.states.size(), 1u);
  EXPECT_TRUE(t.actions.empty());
}

TEST(Rollout, RepeatedSeedRepeatsTrajectory) {
  const GridWorld w = build_gridworld(u_shaped_grid_spec());
  const PolicyTable u = PolicyTable::uniform(w.num_states(), kGridActions);
  const Trajectory a = sample_rollout(w.mdp(), u, 100, 42);
  const Trajectory b = sample_rollout(w.mdp(), u, 100, 42);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.actions, b.actions);
  ASSERT_EQ(a.num_transitions(), 100u);
  for (std::size_t t = 0; t < a.num_transitions(); ++t) {
    EXPECT_GT(w.mdp().prob(a.states[t], a.actions[t], a.states[t + 1]), 0.0);
  }
}

TEST(Rollout, VisitFrequenciesMatchOccupancyInTotalVariation) {
  GridSpec spec;
  const GridWorld w = build_gridworld(spec);
  const PolicyTable u = PolicyTable::uniform(w.num_states(), kGridActions);
  const int horizon = 100;
  const int n = 100000;
  const Eigen::VectorXd exact = state_occupancy(w.mdp(), u, horizon);
  EXPECT_NEAR(exact.sum(), 1.0, 1e-12);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(w.num_states());
  for (int i = 0; i < n; ++i) {
    for (StateId s : sample_rollout(w.mdp(), u, horizon, 1000 + i).states) counts(s) += 1.0;
  }
  counts /= static_cast<double>(n) * (horizon + 1);
  EXPECT_LT(0.5 * (counts - exact).cwiseAbs().sum(), 1e-2);
}

TEST(Rollout, TransitionFrequenciesPassChiSquare) {
  GridSpec spec;
  spec.width = spec.height = 3;
  spec.goal_cell = {2, 2};
  spec.slip_prob = 0.4;
  const GridWorld w = build_gridworld(spec);
  const PolicyTable u = PolicyTable::uniform(w.num_states(), kGridActions);
  const int n_states = w.num_states();
  std::vector<double> counts(static_cast<std::size_t>(n_states) * kGridActions * n_states, 0.0);
  std::vector<double> totals(static_cast<std::size_t>(n_states) * kGridActions, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const Trajectory t = sample_rollout(w.mdp(), u, 100, 77 + i);
    for (std::size_t k = 0; k < t.num_transitions(); ++k) {
      const std::size_t row = static_cast<std::size_t>(t.states[k]) * kGridActions + t.actions[k];
      counts[row * n_states + t.states[k + 1]] += 1.0;
      totals[row] += 1.0;
    }
  }
  double chi2 = 0.0;
  int dof = 0;
  for (StateId s = 0; s < n_states; ++s) {
    for (int a = 0; a < kGridActions; ++a) {
      const std::size_t row = static_cast<std::size_t>(s) * kGridActions + a;
      int support = 0;
      for (StateId sn = 0; sn < n_states; ++sn) {
        const double expected = totals[row] * w.mdp().prob(s, a, sn);
        if (expected > 0.0) {
          const double d = counts[row * n_states + sn] - expected;
          chi2 += d * d / expected;
          ++support;
        } else {
          EXPECT_EQ(counts[row * n_states + sn], 0.0);
        }
      }
      dof += support - 1;
    }
  }
  // Mean dof, sd sqrt(2 dof); six standard deviations is a loose but meaningful bound.
  EXPECT_LT(chi2, dof + 6.0 * std::sqrt(2.0 * dof));
}

TEST(Rollout, GoalHitProbabilityAgreesWithSampling) {
  const GridWorld w = build_gridworld(u_shaped_grid_spec());
  const PolicyTable u = PolicyTable::uniform(w.num_states(), kGridActions);
  const double exact = goal_hit_probability(w.mdp(), u, w.start_state(), w.goal_state(), 100);
  const double sampled = goal_success_rate(w.mdp(), u, w.start_state(), w.goal_state(), 100, 20000, 5);
  EXPECT_NEAR(sampled, exact, 0.015);
  EXPECT_DOUBLE_EQ(goal_hit_probability(w.mdp(), u, w.goal_state(), w.goal_state(), 0), 1.0);
}

TEST(PolicyTable, GreedyBreaksTiesTowardTheLowestIndex) {
  Eigen::MatrixXd q(2, 3);
  q << 1.0, 2.0, 2.0, 0.0, 0.0, 0.0;
  const PolicyTable g = PolicyTable::greedy(q);
  EXPECT_DOUBLE_EQ(g.probs(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(g.probs(1, 0), 1.0);
  EXPECT_NO_THROW(g.check());
}

TEST(MdpFile, RoundTripsExactly) {
  const GridWorld w = build_gridworld(u_shaped_grid_spec());
  const auto path = (std::filesystem::temp_directory_path() / "odrl_mdp_roundtrip.txt").string();
  write_mdp_file(path, w.mdp());
  const TabularMdp back = read_mdp_file(path);
  EXPECT_EQ(back.transition(), w.mdp().transition());
  ASSERT_EQ(back.initial_dist().size(), w.mdp().initial_dist().size());
  for (std::size_t i = 0; i < back.initial_dist().size(); ++i) {
    EXPECT_EQ(back.initial_dist()[i], w.mdp().initial_dist()[i]);
  }
  write_tensor_file(path, w.mdp().transition());
  EXPECT_EQ(read_tensor_file(path), w.mdp().transition());
  std::filesystem::remove(path);
}

TEST(KlToUniform, ZeroForUniformAndLogAForDeterministic) {
  const Eigen::VectorXd u = kl_to_uniform(PolicyTable::uniform(2, 4));
  EXPECT_NEAR(u.cwiseAbs().maxCoeff(), 0.0, 1e-15);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(1, 4);
  q(0, 2) = 1.0;
  EXPECT_NEAR(kl_to_uniform(PolicyTable::greedy(q))(0), std::log(4.0), 1e-15);
}

}  // namespace
}  // namespace odrl
