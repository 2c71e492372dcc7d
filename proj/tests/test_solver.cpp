#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "odrl/gridworld.hpp"
#include "odrl/oracle.hpp"
#include "odrl/random_instances.hpp"
#include "odrl/solver.hpp"

namespace odrl {
namespace {

SolverConfig unit_config(double alpha = 1.0, double prior = 0.9) {
  SolverConfig cfg;
  cfg.entropy_weight = alpha;
  cfg.prior_continue = prior;
  return cfg;
}

struct GridFixture {
  GridWorld world = build_gridworld(GridSpec{});
  DynamicsModel model = [this] {
    DynamicsModel m = DynamicsModel::uniform(world.num_states(), kGridActions, ModelMode::mixing);
    for (int i = 0; i < 30; ++i) m.apply_mixing(world.mdp());
    return m;
  }();
};

TEST(Variant, NamesRoundTrip) {
  for (Variant v : {Variant::full, Variant::fixed_qT, Variant::simplified, Variant::fixed_time,
                    Variant::sparse_indicator}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(parse_variant("sparse_baseline"), Variant::sparse_indicator);
  EXPECT_THROW(parse_variant("dense"), std::invalid_argument);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.eval_tolerance = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.prior_continue = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.variant = Variant::fixed_time;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(DerivedReward, UniformModelAtThePrior) {
  const DynamicsModel m = DynamicsModel::uniform(64, 4, ModelMode::mixing);
  const TimePosterior q = TimePosterior::constant(64, 4, 0.99);
  const double r = derived_reward(3, 1, 10, q, TimePrior::make(0.99), m);
  EXPECT_NEAR(r, -0.041589, 1e-6);
  EXPECT_DOUBLE_EQ(r, (1.0 - 0.99) * std::log(1.0 / 64.0));
}

TEST(DerivedReward, BoundedByTheLikelihoodTerm) {
  std::mt19937_64 rng(1);
  const DynamicsModel m = random_model(4, 3, rng);
  const TimePosterior q = random_posterior(4, 3, 0.01, 0.99, rng);
  const TimePrior prior = TimePrior::make(0.7);
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) {
      const double bound = (1.0 - q.continue_prob(s, a)) * m.log_likelihood(s, a, 2);
      EXPECT_LE(derived_reward(s, a, 2, q, prior, m), bound);
    }
  }
}

TEST(Backup, ZeroContinuationReturnsTheReward) {
  std::mt19937_64 rng(2);
  const TabularMdp mdp = random_mdp(4, 2, rng);
  const Eigen::MatrixXd reward = Eigen::MatrixXd::Random(4, 2);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Random(4, 2) * 50.0;
  const Eigen::MatrixXd out = backup_with_reward(q, PolicyTable::uniform(4, 2), Eigen::MatrixXd::Zero(4, 2),
                                                 reward, mdp.transition(), unit_config());
  EXPECT_EQ(out, reward);
}

TEST(Backup, MatchesScalarFormula) {
  std::mt19937_64 rng(4);
  const TabularMdp mdp = random_mdp(3, 2, rng);
  const DynamicsModel model = random_model(3, 2, rng);
  const PolicyTable pi = random_softmax_policy(3, 2, 1.0, rng);
  const TimePosterior qp = random_posterior(3, 2, 0.1, 0.9, rng);
  const SolverConfig cfg = unit_config(0.4, 0.8);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Random(3, 2);
  const QTable out = bellman_backup(QTable{q, 1}, pi, qp, mdp.transition(), model, 1, cfg);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      double ev = 0.0;
      for (int sn = 0; sn < 3; ++sn) {
        double v = 0.0, kl = 0.0;
        for (int an = 0; an < 2; ++an) {
          v += pi.probs(sn, an) * q(sn, an);
          kl += pi.probs(sn, an) * std::log(2.0 * pi.probs(sn, an));
        }
        ev += mdp.prob(s, a, sn) * (v - 0.4 * kl);
      }
      const double c = qp.continue_prob(s, a);
      const double r = (1 - c) * std::log(model.prob(s, a, 1)) - bernoulli_kl(c, 0.8);
      EXPECT_NEAR(out.values(s, a), r + c * ev, 1e-13);
    }
  }
}

TEST(Backup, ContractsOnTheGrid) {
  const GridFixture g;
  std::mt19937_64 rng(5);
  const int n = g.world.num_states();
  const PolicyTable pi = random_softmax_policy(n, kGridActions, 1.0, rng);
  const TimePosterior qp = random_posterior(n, kGridActions, 0.1, 0.97, rng);
  const SolverConfig cfg = unit_config(0.3, 0.9);
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd q1 = Eigen::MatrixXd::Random(n, kGridActions) * 20.0;
    const Eigen::MatrixXd q2 = Eigen::MatrixXd::Random(n, kGridActions) * 20.0;
    const auto t1 = bellman_backup(QTable{q1, 0}, pi, qp, g.world.mdp().transition(), g.model, 0, cfg);
    const auto t2 = bellman_backup(QTable{q2, 0}, pi, qp, g.world.mdp().transition(), g.model, 0, cfg);
    EXPECT_LE((t1.values - t2.values).cwiseAbs().maxCoeff(),
              qp.max_entry() * (q1 - q2).cwiseAbs().maxCoeff() + 1e-12);
  }
}

TEST(Backup, FullWithPriorContinuationEqualsSimplified) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const TabularMdp mdp = random_mdp(5, 3, rng);
    const DynamicsModel model = random_model(5, 3, rng);
    const PolicyTable pi = random_softmax_policy(5, 3, 1.0, rng);
    const SolverConfig cfg = unit_config(0.2 + 0.03 * i, 0.05 + 0.045 * i);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Random(5, 3) * 4.0;
    const TimePosterior qp = TimePosterior::constant(5, 3, cfg.prior_continue);
    const QTable full = bellman_backup(QTable{q, 4}, pi, qp, mdp.transition(), model, 4, cfg);
    const QTable simple = simplified_backup(QTable{q, 4}, pi, mdp.transition(), model, 4, cfg.prior_continue, cfg);
    EXPECT_LE((full.values - simple.values).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SimplifiedBackup, VanishingDiscountIsTheLikelihoodTable) {
  std::mt19937_64 rng(7);
  const TabularMdp mdp = random_mdp(4, 2, rng);
  const DynamicsModel model = random_model(4, 2, rng);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Random(4, 2);
  const QTable out = simplified_backup(QTable{q, 0}, PolicyTable::uniform(4, 2), mdp.transition(), model, 0,
                                       1e-6, unit_config());
  EXPECT_LT((out.values - log_likelihood_table(model, 0)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(SimplifiedBackup, SelfLoopFixedPointIsTheLogLikelihood) {
  // Dynamics self-loop; the model puts 0.3 on the goal state 0 and the rest on a second state.
  const TransitionTensor loop(2, 1, {1.0, 0.0, 0.0, 1.0});
  const DynamicsModel model = DynamicsModel::frozen(TransitionTensor(2, 1, {0.3, 0.7, 0.5, 0.5}));
  SolverConfig cfg = unit_config(1.0, 0.6);
  cfg.variant = Variant::simplified;
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(2, 1, 5.0);
  for (int i = 0; i < 200; ++i) {
    q = simplified_backup(QTable{q, 0}, PolicyTable::uniform(2, 1), loop, model, 0, 0.6, cfg).values;
  }
  EXPECT_NEAR(q(0, 0), std::log(0.3), 1e-12);
}

TEST(Evaluation, SingleStateGeometricSeries) {
  const TransitionTensor loop(1, 1, {1.0});
  const DynamicsModel model = DynamicsModel::frozen(loop);
  const double c = 0.7;
  const TimePosterior qp = TimePosterior::constant(1, 1, c);
  const SolverConfig cfg = unit_config(1.0, 0.9);
  const double r = derived_reward(0, 0, 0, qp, cfg.prior(), model);
  const QTable direct = policy_evaluation_direct(PolicyTable::uniform(1, 1), qp, loop, model, 0, cfg);
  const EvaluationResult it = policy_evaluation(PolicyTable::uniform(1, 1), qp, loop, model, 0, cfg);
  EXPECT_NEAR(direct.values(0, 0), r / (1 - c), 1e-13);
  EXPECT_NEAR(it.q.values(0, 0), r / (1 - c), 1e-9);
}

TEST(Evaluation, IterativeMatchesDirectOnTheGrid) {
  const GridFixture g;
  std::mt19937_64 rng(8);
  const int n = g.world.num_states();
  const PolicyTable pi = random_softmax_policy(n, kGridActions, 1.0, rng);
  const TimePosterior qp = random_posterior(n, kGridActions, 0.2, 0.95, rng);
  SolverConfig cfg = unit_config(0.5, 0.9);
  cfg.eval_tolerance = 1e-12;
  const EvaluationResult it = policy_evaluation(pi, qp, g.world.mdp().transition(), g.model, 7, cfg);
  const QTable direct = policy_evaluation_direct(pi, qp, g.world.mdp().transition(), g.model, 7, cfg);
  EXPECT_LT((it.q.values - direct.values).cwiseAbs().maxCoeff(), 1e-8);
  // Fixed point: one more backup moves it by at most the tolerance.
  const QTable again = bellman_backup(direct, pi, qp, g.world.mdp().transition(), g.model, 7, cfg);
  EXPECT_LT((again.values - direct.values).cwiseAbs().maxCoeff(), 1e-10);
  // Residuals shrink by at most max q per sweep.
  for (std::size_t k = 1; k < it.residuals.size(); ++k) {
    EXPECT_LE(it.residuals[k], qp.max_entry() * it.residuals[k - 1] * (1 + 1e-9) + 1e-15);
  }
}

TEST(Evaluation, IterativeReportsNonConvergence) {
  const GridFixture g;
  const int n = g.world.num_states();
  const TimePosterior qp = TimePosterior::constant(n, kGridActions, 0.999);
  SolverConfig cfg = unit_config();
  cfg.max_eval_iters = 5;
  EXPECT_THROW(policy_evaluation(PolicyTable::uniform(n, kGridActions), qp, g.world.mdp().transition(),
                                 g.model, 0, cfg),
               std::runtime_error);
}

TEST(Improvement, ConstantRowGivesUniform) {
  const QTable q{Eigen::MatrixXd::Constant(2, 3, 4.2), 0};
  const PolicyTable p = policy_improvement(q, unit_config());
  EXPECT_LT((p.probs.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-15);
}

TEST(Improvement, TwoPointSoftmax) {
  const QTable q{(Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished(), 0};
  const PolicyTable p = policy_improvement(q, unit_config(1.0));
  const double e = std::exp(1.0);
  EXPECT_NEAR(p.probs(0, 0), e / (e + 1), 1e-15);
  EXPECT_NEAR(p.probs(0, 1), 1 / (e + 1), 1e-15);
}

TEST(Improvement, LargeValuesDoNotOverflow) {
  const QTable q{(Eigen::MatrixXd(1, 3) << 1e4, 1e4 - 0.01, -1e4).finished(), 0};
  const PolicyTable p = policy_improvement(q, unit_config(0.01));
  EXPECT_NO_THROW(p.check());
  // The stored gap between the top two entries, in units of alpha.
  const double gap = (q.values(0, 0) - q.values(0, 1)) / 0.01;
  EXPECT_NEAR(p.probs(0, 0), 1.0 / (1.0 + std::exp(-gap)), 1e-12);
}

TEST(Improvement, NeverLowersTheRegularizedObjective) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const double alpha = 0.05 + 0.04 * i;
    const SolverConfig cfg = unit_config(alpha);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Random(4, 3) * 3.0;
    const PolicyTable pi = random_softmax_policy(4, 3, 2.0, rng);
    const PolicyTable plus = policy_improvement(QTable{q, 0}, cfg);
    for (int s = 0; s < 4; ++s) {
      EXPECT_GE(regularized_objective(q, plus, s, alpha), regularized_objective(q, pi, s, alpha) - 1e-15);
    }
  }
}

TEST(PolicyIteration, MonotoneAndMatchesTheOracleOnThreeStates) {
  std::mt19937_64 rng(10);
  const TabularMdp mdp = random_mdp(3, 2, rng);
  const DynamicsModel model = random_model(3, 2, rng);
  SolverConfig cfg = unit_config(0.5, 0.8);
  const PolicyIterationResult res =
      policy_iteration(mdp, 2, cfg, ModelSchedule::fixed(model), PolicyTable::uniform(3, 2));
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.monotonicity_violation, -1);
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    const auto& r = res.log[i];
    EXPECT_GE(r.objective_after_q, r.objective_start - 10 * cfg.eval_tolerance);
    EXPECT_GE(r.objective_after_pi, r.objective_after_q - 10 * cfg.eval_tolerance);
    if (i > 0) {
      EXPECT_GE(r.objective_start, res.log[i - 1].objective_after_pi - 10 * cfg.eval_tolerance);
    }
  }
  ObjectiveQuery query{&mdp, &res.policy, &res.qpost, &model, cfg.prior(), 2, 0, cfg.entropy_weight};
  const EnumerationResult e = enumerate_objective(query, 400, 1e-9);
  EXPECT_NEAR(e.objective_F, res.log.back().objective_after_pi, 1e-6);
  EXPECT_NEAR(e.objective_F, res.final_values(0), 1e-6);
}

TEST(PolicyIteration, GoalAtTheStartPrefersStayingPut) {
  GridSpec spec;
  spec.width = spec.height = 4;
  spec.start_cell = spec.goal_cell = {0, 0};
  const GridWorld w = build_gridworld(spec);
  const int n = w.num_states();
  TransitionTensor est = w.mdp().transition();
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < kGridActions; ++a) {
      for (int sn = 0; sn < n; ++sn) est(s, a, sn) = (est(s, a, sn) + 1e-3) / (1 + n * 1e-3);
    }
  }
  const DynamicsModel model = DynamicsModel::frozen(est);
  SolverConfig cfg = unit_config(0.01, 0.5);
  const PolicyIterationResult res =
      policy_iteration(w.mdp(), w.goal_state(), cfg, ModelSchedule::fixed(model), PolicyTable::uniform(n, kGridActions));
  int best = -1;
  res.q.values.row(w.start_state()).maxCoeff(&best);
  // From the top-left corner both "up" and "left" bump the wall and stay on the goal.
  EXPECT_TRUE(best == static_cast<int>(GridAction::up) || best == static_cast<int>(GridAction::left));
  const double v_star = res.final_values(w.start_state());
  for (int a = 0; a < kGridActions; ++a) {
    Eigen::MatrixXd one = Eigen::MatrixXd::Zero(n, kGridActions);
    one.col(a).setOnes();
    PolicyTable fixed{one};
    // Same continuation table: the converged policy is the soft-optimal response to it.
    const QTable q = policy_evaluation_direct(fixed, res.qpost, w.mdp().transition(), model, w.goal_state(), cfg);
    EXPECT_GE(v_star, policy_values(q.values, fixed, cfg)(w.start_state()) - 1e-9) << "action " << a;
  }
  EXPECT_GE(v_star, policy_values(policy_evaluation_direct(PolicyTable::uniform(n, kGridActions), res.qpost,
                                                           w.mdp().transition(), model, w.goal_state(), cfg)
                                      .values,
                                  PolicyTable::uniform(n, kGridActions), cfg)(w.start_state()) -
                        1e-9);
}

TEST(PolicyIteration, FixedContinuationVariantKeepsThePrior) {
  std::mt19937_64 rng(11);
  const TabularMdp mdp = random_mdp(4, 2, rng);
  const DynamicsModel model = random_model(4, 2, rng);
  SolverConfig cfg = unit_config(0.5, 0.7);
  cfg.variant = Variant::fixed_qT;
  const PolicyIterationResult res =
      policy_iteration(mdp, 1, cfg, ModelSchedule::fixed(model), PolicyTable::uniform(4, 2));
  EXPECT_LT((res.qpost.continue_prob.array() - 0.7).abs().maxCoeff(), 1e-15);
  EXPECT_EQ(res.monotonicity_violation, -1);
}

TEST(PolicyIteration, RejectsFixedTime) {
  std::mt19937_64 rng(12);
  const TabularMdp mdp = random_mdp(2, 2, rng);
  SolverConfig cfg = unit_config();
  cfg.variant = Variant::fixed_time;
  cfg.t_star = 2;
  EXPECT_THROW(policy_iteration(mdp, 0, cfg, ModelSchedule::fixed(random_model(2, 2, rng)), PolicyTable::uniform(2, 2)),
               std::invalid_argument);
}

TEST(Rewards, DerivedIsDenseWhileSparseIsNot) {
  const GridFixture g;
  const int n = g.world.num_states();
  const TimePosterior qp = TimePosterior::constant(n, kGridActions, 0.5);
  const Eigen::MatrixXd dense = derived_reward_table(g.world.goal_state(), qp, TimePrior::make(0.5), g.model);
  EXPECT_TRUE(dense.allFinite());
  const double mean = dense.mean();
  EXPECT_GT((dense.array() - mean).square().mean(), 0.0);
  const Eigen::MatrixXd sparse = sparse_reward_table(g.world.mdp().transition(), g.world.goal_state());
  int nonzero_states = 0;
  for (int s = 0; s < n; ++s) nonzero_states += sparse.row(s).maxCoeff() > 0.0 ? 1 : 0;
  // Only the goal's own 2x2 corner block can reach it in one step.
  EXPECT_EQ(nonzero_states, 4);
}

TEST(ModelSchedule, MixingAdvancesOneStepPerCall) {
  const GridWorld w = build_gridworld(GridSpec{});
  ModelSchedule sched = ModelSchedule::mixing(
      DynamicsModel::uniform(w.num_states(), kGridActions, ModelMode::mixing, 0.01), w.mdp());
  EXPECT_FALSE(sched.is_static());
  sched.advance();
  sched.advance();
  const double keep = 0.99 * 0.99;
  EXPECT_NEAR(sched.current().prob(0, 0, 0), keep / 64 + (1 - keep) * w.mdp().prob(0, 0, 0), 1e-15);
  ModelSchedule fixed = ModelSchedule::fixed(DynamicsModel::uniform(64, 4, ModelMode::frozen));
  fixed.advance();
  EXPECT_TRUE(fixed.is_static());
  EXPECT_DOUBLE_EQ(fixed.current().prob(0, 0, 0), 1.0 / 64);
}

}  // namespace
}  // namespace odrl
