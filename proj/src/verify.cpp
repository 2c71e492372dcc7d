#include "odrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "odrl/csv_io.hpp"
#include "odrl/fixed_time.hpp"
#include "odrl/gridworld.hpp"
#include "odrl/oracle.hpp"
#include "odrl/random_instances.hpp"
#include "odrl/solver.hpp"
#include "odrl/variational_time.hpp"

namespace odrl {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

void record(SuiteResult& r, double lhs, double rhs, double gap) {
  r.records.push_back({static_cast<int>(r.records.size()), lhs, rhs, gap});
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lemmas",      "objective", "kl",   "optimal_q",
                                              "contraction", "monotone", "simplified", "fixed_time"};
  return names;
}

SuiteResult suite_lemmas(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "lemmas";
  r.tolerance = 1e-9;
  r.seed = opt.seed + 1;
  std::mt19937_64 rng(r.seed);
  const int t_max = 50;
  double survival_gap = 0.0;
  double kl_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> seq(t_max + 1);
    for (double& c : seq) c = uniform_real(rng, 0.05, 0.999);
    const DiscreteTimeDist d = time_dist_from_continue(seq, t_max);
    double worst = 0.0;
    for (int t = 0; t <= t_max + 1; ++t) {
      worst = std::max(worst, std::abs(d.survival(t) - survival_from_continue(seq, t)));
    }
    survival_gap = std::max(survival_gap, worst);
    record(r, d.survival(t_max), survival_from_continue(seq, t_max), worst);
  }
  for (int i = 0; i < 100; ++i) {
    std::vector<double> seq(t_max + 1);
    for (double& c : seq) c = uniform_real(rng, 0.05, 0.999);
    const TimePrior prior = TimePrior::make(uniform_real(rng, 0.05, 0.995));
    const TimeKl kl = kl_time_dists(seq, prior, t_max);
    kl_gap = std::max(kl_gap, std::abs(kl.direct - kl.decomposed));
    record(r, kl.direct, kl.decomposed, std::abs(kl.direct - kl.decomposed));
  }
  r.instances = 200;
  r.max_gap = std::max(survival_gap, kl_gap);
  r.passed = survival_gap <= r.tolerance && kl_gap <= r.tolerance;
  r.detail = "survival " + fmt(survival_gap) + ", kl decomposition " + fmt(kl_gap);
  return r;
}

SuiteResult suite_objective(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "objective";
  r.tolerance = 1e-6;
  r.seed = opt.seed + 2;
  std::mt19937_64 rng(r.seed);
  double worst_tail = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n_states = uniform_int(rng, 1, 5);
    const int n_actions = uniform_int(rng, 1, 3);
    const TabularMdp mdp = random_mdp(n_states, n_actions, rng);
    const DynamicsModel model = random_model(n_states, n_actions, rng);
    const PolicyTable policy = random_softmax_policy(n_states, n_actions, 1.0, rng);
    const TimePosterior qpost = random_posterior(n_states, n_actions, 0.05, 0.9, rng);
    SolverConfig cfg;
    cfg.prior_continue = uniform_real(rng, 0.3, 0.9);
    cfg.entropy_weight = uniform_real(rng, 0.1, 1.5);
    cfg.kl_sign = opt.kl_sign;
    const StateId goal = uniform_int(rng, 0, n_states - 1);

    const QTable q = policy_evaluation_direct(policy, qpost, mdp.transition(), model, goal, cfg);
    const double v0 = policy_values(q.values, policy, cfg)(0);

    ObjectiveQuery query{&mdp, &policy, &qpost, &model, cfg.prior(), goal, 0, cfg.entropy_weight};
    int t_max = 200;
    EnumerationResult e;
    for (;;) {
      try {
        e = enumerate_objective(query, t_max, 1e-9);
        break;
      } catch (const std::runtime_error&) {
        t_max *= 2;
      }
    }
    worst_tail = std::max(worst_tail, e.tail_bound);
    r.max_gap = std::max(r.max_gap, std::abs(e.objective_F - v0) / (1.0 + std::abs(v0)));
    record(r, e.objective_F, v0, std::abs(e.objective_F - v0));
    ++r.instances;
  }
  r.passed = r.max_gap <= r.tolerance && worst_tail < 1e-9;
  r.detail = "relative gap " + fmt(r.max_gap) + ", worst tail bound " + fmt(worst_tail);
  return r;
}

SuiteResult suite_kl(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "kl";
  r.tolerance = 1e-4;
  r.seed = opt.seed + 3;
  std::mt19937_64 rng(r.seed);
  double min_kl = 1e300;
  for (int i = 0; i < 20; ++i) {
    const int n_states = uniform_int(rng, 2, 3);
    const int n_actions = uniform_int(rng, 1, 3);
    const TabularMdp mdp = random_mdp(n_states, n_actions, rng);
    const DynamicsModel model = random_model(n_states, n_actions, rng);
    const PolicyTable policy = random_softmax_policy(n_states, n_actions, 1.0, rng);
    const TimePosterior qpost = random_posterior(n_states, n_actions, 0.05, 0.95, rng);
    const TimePrior prior = TimePrior::make(uniform_real(rng, 0.3, 0.9));
    const StateId goal = uniform_int(rng, 0, n_states - 1);
    ObjectiveQuery query{&mdp, &policy, &qpost, &model, prior, goal, 0, 1.0};
    const KlIdentity k = verify_kl_identity(query, 6);
    r.max_gap = std::max(r.max_gap, std::abs(k.kl_direct - k.neg_F_plus_C));
    record(r, k.kl_direct, k.neg_F_plus_C, std::abs(k.kl_direct - k.neg_F_plus_C));
    min_kl = std::min(min_kl, k.kl_direct);
    ++r.instances;
  }
  r.passed = r.max_gap <= r.tolerance && min_kl >= 0.0;
  r.detail = "gap " + fmt(r.max_gap) + ", smallest KL " + fmt(min_kl);
  return r;
}

SuiteResult suite_optimal_q(const VerifyOptions& opt) {
  const double step = 1e-3;
  SuiteResult r;
  r.name = "optimal_q";
  r.tolerance = step;
  r.seed = opt.seed + 4;
  std::mt19937_64 rng(r.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_curvature = -1e300;
  bool all_ok = true;
  for (int i = 0; i < 30; ++i) {
    const int n_states = uniform_int(rng, 2, 4);
    const int n_actions = uniform_int(rng, 1, 3);
    const TabularMdp mdp = random_mdp(n_states, n_actions, rng);
    const DynamicsModel model = random_model(n_states, n_actions, rng);
    const PolicyTable policy = random_softmax_policy(n_states, n_actions, 1.0, rng);
    Eigen::MatrixXd q(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) q(s, a) = normal(rng);
    }
    const TimePrior prior = TimePrior::make(uniform_real(rng, 0.2, 0.95));
    const double alpha = uniform_real(rng, 0.1, 1.0);
    const StateId goal = uniform_int(rng, 0, n_states - 1);
    const TimePosterior closed = optimal_continue_prob(QTable{q, goal}, policy, model,
                                                       mdp.transition(), goal, prior, alpha);
    const QcontReport rep =
        verify_optimal_qcont(q, policy, model, mdp, goal, prior, alpha, closed, step);
    r.max_gap = std::max(r.max_gap, rep.max_argmax_gap);
    record(r, rep.max_argmax_gap, step, rep.max_argmax_gap);
    worst_curvature = std::max(worst_curvature, rep.max_second_difference);
    all_ok = all_ok && rep.ok;
    ++r.instances;
  }
  r.passed = all_ok && r.max_gap <= r.tolerance * (1.0 + 1e-9);
  r.detail = "argmax gap " + fmt(r.max_gap) + ", largest second difference " + fmt(worst_curvature);
  return r;
}

SuiteResult suite_contraction(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "contraction";
  r.tolerance = 1e-8;
  r.seed = opt.seed + 5;
  std::mt19937_64 rng(r.seed);
  std::normal_distribution<double> normal(0.0, 10.0);
  GridSpec spec;
  const GridWorld world = build_gridworld(spec);
  const TabularMdp& mdp = world.mdp();
  const int n = mdp.num_states();
  const int n_actions = mdp.num_actions();
  const StateId goal = world.goal_state();
  DynamicsModel model = DynamicsModel::uniform(n, n_actions, ModelMode::mixing);
  for (int i = 0; i < 50; ++i) model.apply_mixing(mdp);
  const PolicyTable policy = random_softmax_policy(n, n_actions, 1.0, rng);
  const TimePosterior qpost = random_posterior(n, n_actions, 0.1, 0.95, rng);
  SolverConfig cfg;
  cfg.entropy_weight = 0.5;
  cfg.kl_sign = opt.kl_sign;
  cfg.prior_continue = 0.9;
  cfg.eval_tolerance = 1e-12;

  double worst_excess = -1e300;
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXd q1(n, n_actions), q2(n, n_actions);
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        q1(s, a) = normal(rng);
        q2(s, a) = normal(rng);
      }
    }
    const auto t1 = bellman_backup(QTable{q1, goal}, policy, qpost, mdp.transition(), model, goal, cfg);
    const auto t2 = bellman_backup(QTable{q2, goal}, policy, qpost, mdp.transition(), model, goal, cfg);
    const double ratio = (t1.values - t2.values).cwiseAbs().maxCoeff() /
                         (q1 - q2).cwiseAbs().maxCoeff();
    worst_excess = std::max(worst_excess, ratio - qpost.max_entry());
    record(r, ratio, qpost.max_entry(), ratio - qpost.max_entry());
    ++r.instances;
  }

  const EvaluationResult it = policy_evaluation(policy, qpost, mdp.transition(), model, goal, cfg);
  bool monotone = true;
  for (std::size_t k = 1; k < it.residuals.size(); ++k) {
    if (it.residuals[k] > it.residuals[k - 1]) monotone = false;
  }
  const QTable direct = policy_evaluation_direct(policy, qpost, mdp.transition(), model, goal, cfg);
  r.max_gap = (it.q.values - direct.values).cwiseAbs().maxCoeff();
  r.passed = worst_excess <= 1e-12 && monotone && r.max_gap <= r.tolerance;
  r.detail = "ratio minus max q " + fmt(worst_excess) + ", residuals " +
             (monotone ? "monotone" : "NOT monotone") + " over " + std::to_string(it.sweeps) +
             " sweeps, iterative vs direct " + fmt(r.max_gap);
  return r;
}

SuiteResult suite_monotone(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "monotone";
  r.tolerance = 0.0;
  r.seed = opt.seed + 6;
  std::mt19937_64 rng(r.seed);
  double worst = 1e300;
  bool flagged = false;
  auto run = [&](const TabularMdp& mdp, StateId goal, SolverConfig cfg, ModelSchedule schedule) {
    cfg.kl_sign = opt.kl_sign;
    const PolicyTable init = random_softmax_policy(mdp.num_states(), mdp.num_actions(), 1.0, rng);
    const PolicyIterationResult res = policy_iteration(mdp, goal, cfg, std::move(schedule), init);
    double local = 1e300;
    for (const auto& rec : res.log) local = std::min({local, rec.min_gain_q, rec.min_gain_pi});
    worst = std::min(worst, local);
    record(r, local, -10.0 * cfg.eval_tolerance, std::max(0.0, -local));
    flagged = flagged || res.monotonicity_violation >= 0;
    r.tolerance = 10.0 * cfg.eval_tolerance;
    ++r.instances;
  };
  for (int i = 0; i < 10; ++i) {
    const int n_states = uniform_int(rng, 3, 6);
    const int n_actions = uniform_int(rng, 2, 3);
    const TabularMdp mdp = random_mdp(n_states, n_actions, rng);
    SolverConfig cfg;
    cfg.prior_continue = uniform_real(rng, 0.3, 0.95);
    cfg.entropy_weight = uniform_real(rng, 0.05, 1.0);
    cfg.max_outer_iters = 30;
    run(mdp, uniform_int(rng, 0, n_states - 1), cfg,
        ModelSchedule::fixed(random_model(n_states, n_actions, rng)));
  }
  GridSpec spec;
  spec.width = 5;
  spec.height = 5;
  spec.goal_cell = {4, 4};
  const GridWorld world = build_gridworld(spec);
  SolverConfig cfg;
  cfg.prior_continue = 0.5;
  cfg.entropy_weight = 0.01;
  cfg.max_outer_iters = 30;
  run(world.mdp(), world.goal_state(), cfg,
      ModelSchedule::mixing(DynamicsModel::uniform(world.num_states(), kGridActions, ModelMode::mixing),
                            world.mdp()));
  r.max_gap = std::max(0.0, -worst);
  r.passed = !flagged && -worst <= r.tolerance;
  r.detail = "smallest per-state relative gain " + fmt(worst);
  return r;
}

SuiteResult suite_simplified(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "simplified";
  r.tolerance = 1e-12;
  r.seed = opt.seed + 7;
  std::mt19937_64 rng(r.seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const int n_states = uniform_int(rng, 2, 6);
    const int n_actions = uniform_int(rng, 1, 3);
    const TabularMdp mdp = random_mdp(n_states, n_actions, rng);
    const DynamicsModel model = random_model(n_states, n_actions, rng);
    const PolicyTable policy = random_softmax_policy(n_states, n_actions, 1.0, rng);
    SolverConfig cfg;
    cfg.prior_continue = uniform_real(rng, 0.1, 0.99);
    cfg.entropy_weight = uniform_real(rng, 0.05, 1.0);
    cfg.kl_sign = opt.kl_sign;
    const StateId goal = uniform_int(rng, 0, n_states - 1);
    Eigen::MatrixXd q(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) q(s, a) = normal(rng);
    }
    const TimePosterior qpost = TimePosterior::constant(n_states, n_actions, cfg.prior_continue);
    const QTable full = bellman_backup(QTable{q, goal}, policy, qpost, mdp.transition(), model, goal, cfg);
    const QTable simple = simplified_backup(QTable{q, goal}, policy, mdp.transition(), model, goal,
                                            cfg.prior_continue, cfg);
    const double diff = (full.values - simple.values).cwiseAbs().maxCoeff();
    r.max_gap = std::max(r.max_gap, diff);
    record(r, full.values.cwiseAbs().maxCoeff(), simple.values.cwiseAbs().maxCoeff(), diff);
    ++r.instances;
  }
  r.passed = r.max_gap <= r.tolerance;
  r.detail = "max difference " + fmt(r.max_gap);
  return r;
}

namespace {

/// Deterministic chain 0 -> 1 -> ... -> k with actions {stay, forward}.
TabularMdp chain_mdp(int k) {
  const int n = k + 1;
  TransitionTensor t(n, 2);
  for (int s = 0; s < n; ++s) {
    t(s, 0, s) = 1.0;
    t(s, 1, std::min(s + 1, k)) = 1.0;
  }
  std::vector<double> init(n, 0.0);
  init[0] = 1.0;
  return TabularMdp(std::move(t), std::move(init));
}

DynamicsModel smoothed_truth(const TabularMdp& mdp, double eps) {
  TransitionTensor t = mdp.transition();
  const int n = mdp.num_states();
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      for (int sn = 0; sn < n; ++sn) t(s, a, sn) = (t(s, a, sn) + eps) / (1.0 + n * eps);
    }
  }
  return DynamicsModel::frozen(std::move(t));
}

}  // namespace

SuiteResult suite_fixed_time(const VerifyOptions& opt) {
  SuiteResult r;
  r.name = "fixed_time";
  r.tolerance = 1e-8;
  r.seed = opt.seed + 8;
  std::mt19937_64 rng(r.seed);
  bool chains_ok = true;
  for (int k = 2; k <= 6; ++k) {
    const TabularMdp mdp = chain_mdp(k);
    const DynamicsModel model = smoothed_truth(mdp, 1e-3);
    SolverConfig cfg;
    cfg.entropy_weight = 0.1;
    const FixedTimeValue ft = fixed_time_solve(mdp, model, k, k, cfg);
    const auto greedy = ft.greedy_policies();
    StateId s = 0;
    int first_hit = -1;
    for (int t = 0; t < k; ++t) {
      int a = 0;
      greedy[t].probs.row(s).maxCoeff(&a);
      s = s == k ? k : (a == 1 ? s + 1 : s);
      if (s == k && first_hit < 0) first_hit = t + 1;
    }
    chains_ok = chains_ok && first_hit == k;
    record(r, first_hit, k, std::abs(first_hit - k));
    ++r.instances;
  }
  for (int i = 0; i < 10; ++i) {
    const int n_actions = uniform_int(rng, 1, 3);
    const TabularMdp mdp = random_mdp(3, n_actions, rng);
    const DynamicsModel model = random_model(3, n_actions, rng);
    SolverConfig cfg;
    cfg.entropy_weight = uniform_real(rng, 0.1, 1.0);
    const StateId goal = uniform_int(rng, 0, 2);
    const FixedTimeValue ft = fixed_time_solve(mdp, model, goal, 3, cfg);
    const double enumerated =
        fixed_time_objective_enumerated(mdp, model, ft.policies, goal, 0, cfg.entropy_weight);
    r.max_gap = std::max(r.max_gap, std::abs(enumerated - ft.v_layers[0](0)));
    record(r, enumerated, ft.v_layers[0](0), std::abs(enumerated - ft.v_layers[0](0)));
    ++r.instances;
  }
  r.passed = chains_ok && r.max_gap <= r.tolerance;
  r.detail = std::string("chains ") + (chains_ok ? "reach the goal at t*" : "FAILED") +
             ", enumeration gap " + fmt(r.max_gap);
  return r;
}

std::vector<SuiteResult> run_suites(const std::string& selector, const VerifyOptions& opt) {
  std::vector<std::string> wanted;
  if (selector == "all" || selector.empty()) {
    wanted = suite_names();
  } else {
    std::stringstream ss(selector);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (std::find(suite_names().begin(), suite_names().end(), item) == suite_names().end()) {
        throw std::invalid_argument("unknown suite '" + item + "'");
      }
      wanted.push_back(item);
    }
  }
  std::vector<SuiteResult> out;
  for (const auto& name : wanted) {
    if (name == "lemmas") out.push_back(suite_lemmas(opt));
    if (name == "objective") out.push_back(suite_objective(opt));
    if (name == "kl") out.push_back(suite_kl(opt));
    if (name == "optimal_q") out.push_back(suite_optimal_q(opt));
    if (name == "contraction") out.push_back(suite_contraction(opt));
    if (name == "monotone") out.push_back(suite_monotone(opt));
    if (name == "simplified") out.push_back(suite_simplified(opt));
    if (name == "fixed_time") out.push_back(suite_fixed_time(opt));
  }
  return out;
}

void write_verify_report(const std::string& path, const std::vector<SuiteResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "suite,seed,instance,lhs,rhs,gap\n";
  for (const auto& r : results) {
    for (const auto& rec : r.records) {
      out << r.name << ',' << r.seed << ',' << rec.instance << ',' << format_double(rec.lhs) << ','
          << format_double(rec.rhs) << ',' << format_double(rec.gap) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace odrl
