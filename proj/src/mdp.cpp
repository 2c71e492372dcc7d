#include "odrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "odrl/sampling.hpp"

namespace odrl {

TransitionTensor::TransitionTensor(int n_states, int n_actions)
    : TransitionTensor(n_states, n_actions,
                       std::vector<double>(static_cast<std::size_t>(n_states) * n_actions *
                                               n_states,
                                           0.0)) {}

TransitionTensor::TransitionTensor(int n_states, int n_actions, std::vector<double> data)
    : n_states_(n_states), n_actions_(n_actions), data_(std::move(data)) {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("transition tensor needs positive dimensions");
  }
  if (data_.size() != static_cast<std::size_t>(n_states) * n_actions * n_states) {
    throw std::invalid_argument("transition tensor data has wrong size");
  }
}

double TransitionTensor::max_row_error() const {
  double worst = 0.0;
  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (double p : row(s, a)) sum += p;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return worst;
}

void TransitionTensor::check_simplex(double tol) const {
  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (double p : row(s, a)) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw std::invalid_argument("transition row (" + std::to_string(s) + "," +
                                      std::to_string(a) + ") has a negative or non-finite entry");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) {
        throw std::invalid_argument("transition row (" + std::to_string(s) + "," +
                                    std::to_string(a) + ") sums to " + std::to_string(sum));
      }
    }
  }
}

TabularMdp::TabularMdp(TransitionTensor transition, std::vector<double> initial_dist)
    : transition_(std::move(transition)), initial_dist_(std::move(initial_dist)) {
  transition_.check_simplex();
  if (initial_dist_.size() != static_cast<std::size_t>(transition_.num_states())) {
    throw std::invalid_argument("initial distribution has wrong size");
  }
  double sum = 0.0;
  for (double p : initial_dist_) {
    if (!(p >= 0.0)) throw std::invalid_argument("initial distribution has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("initial distribution sums to " + std::to_string(sum));
  }
}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  return {Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions)};
}

PolicyTable PolicyTable::greedy(const Eigen::MatrixXd& values) {
  PolicyTable out{Eigen::MatrixXd::Zero(values.rows(), values.cols())};
  for (Eigen::Index s = 0; s < values.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < values.cols(); ++a) {
      if (values(s, a) > values(s, best)) best = a;
    }
    out.probs(s, best) = 1.0;
  }
  return out;
}

void PolicyTable::check(double tol) const {
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    if ((probs.row(s).array() < 0.0).any() || !probs.row(s).allFinite()) {
      throw std::invalid_argument("policy row " + std::to_string(s) + " has invalid entries");
    }
    if (std::abs(probs.row(s).sum() - 1.0) > tol) {
      throw std::invalid_argument("policy row " + std::to_string(s) + " does not sum to 1");
    }
  }
}

Eigen::VectorXd kl_to_uniform(const PolicyTable& policy) {
  const double log_n = std::log(static_cast<double>(policy.num_actions()));
  Eigen::VectorXd out(policy.num_states());
  for (int s = 0; s < policy.num_states(); ++s) {
    double kl = 0.0;
    for (int a = 0; a < policy.num_actions(); ++a) {
      const double p = policy.probs(s, a);
      if (p > 0.0) kl += p * (std::log(p) + log_n);
    }
    out(s) = kl;
  }
  return out;
}

Trajectory sample_rollout_from(const TabularMdp& mdp, const PolicyTable& policy, StateId start,
                               int horizon, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  Trajectory traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.states.push_back(start);
  StateId s = start;
  for (int t = 0; t < horizon; ++t) {
    const ActionId a = sample_index(policy.probs.row(s), rng);
    s = sample_index(mdp.transition().row(s, a), rng);
    traj.actions.push_back(a);
    traj.states.push_back(s);
  }
  return traj;
}

Trajectory sample_rollout(const TabularMdp& mdp, const PolicyTable& policy, int horizon,
                          std::uint64_t rng_seed) {
  // The start draw uses a derived stream so the step stream matches sample_rollout_from.
  std::mt19937_64 start_rng(rng_seed ^ 0x9e3779b97f4a7c15ULL);
  const StateId start = sample_index(mdp.initial_dist(), start_rng);
  return sample_rollout_from(mdp, policy, start, horizon, rng_seed);
}

Eigen::VectorXd state_occupancy(const TabularMdp& mdp, const PolicyTable& policy, int horizon) {
  const int n = mdp.num_states();
  Eigen::VectorXd dist(n);
  for (int s = 0; s < n; ++s) dist(s) = mdp.initial_dist()[s];
  Eigen::VectorXd total = dist;
  for (int t = 0; t < horizon; ++t) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (StateId s = 0; s < n; ++s) {
      if (dist(s) == 0.0) continue;
      for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        const double w = dist(s) * policy.probs(s, a);
        if (w == 0.0) continue;
        const auto row = mdp.transition().row(s, a);
        for (StateId sn = 0; sn < n; ++sn) next(sn) += w * row[sn];
      }
    }
    dist = std::move(next);
    total += dist;
  }
  return total / static_cast<double>(horizon + 1);
}

double goal_success_rate(const TabularMdp& mdp, const PolicyTable& policy, StateId start,
                         StateId goal, int horizon, int n_rollouts, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  int hits = 0;
  for (int i = 0; i < n_rollouts; ++i) {
    StateId s = start;
    bool reached = (s == goal);
    for (int t = 0; t < horizon && !reached; ++t) {
      const ActionId a = sample_index(policy.probs.row(s), rng);
      s = sample_index(mdp.transition().row(s, a), rng);
      reached = (s == goal);
    }
    hits += reached ? 1 : 0;
  }
  return n_rollouts > 0 ? static_cast<double>(hits) / n_rollouts : 0.0;
}

double goal_hit_probability(const TabularMdp& mdp, const PolicyTable& policy, StateId start,
                            StateId goal, int horizon) {
  const int n = mdp.num_states();
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(n);
  dist(start) = 1.0;
  double hit = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    hit += dist(goal);
    dist(goal) = 0.0;
    if (t == horizon) break;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (StateId s = 0; s < n; ++s) {
      if (dist(s) == 0.0) continue;
      for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        const double w = dist(s) * policy.probs(s, a);
        if (w == 0.0) continue;
        const auto row = mdp.transition().row(s, a);
        for (StateId sn = 0; sn < n; ++sn) next(sn) += w * row[sn];
      }
    }
    dist = std::move(next);
  }
  return std::min(hit, 1.0);
}

namespace {

void write_entries(std::ostream& out, const TransitionTensor& tensor) {
  out << tensor.num_states() << ' ' << tensor.num_actions() << '\n';
  out << std::setprecision(17);
  for (double p : tensor.data()) out << p << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

struct FlatFile {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;
};

FlatFile read_flat(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  FlatFile f;
  if (!(in >> f.n_states >> f.n_actions) || f.n_states <= 0 || f.n_actions <= 0) {
    throw std::runtime_error(path + ": malformed dimension header");
  }
  double v = 0.0;
  while (in >> v) f.values.push_back(v);
  if (!in.eof()) throw std::runtime_error(path + ": non-numeric entry");
  return f;
}

}  // namespace

void write_tensor_file(const std::string& path, const TransitionTensor& tensor) {
  auto out = open_out(path);
  write_entries(out, tensor);
}

void write_mdp_file(const std::string& path, const TabularMdp& mdp) {
  auto out = open_out(path);
  write_entries(out, mdp.transition());
  for (double p : mdp.initial_dist()) out << p << '\n';
}

TransitionTensor read_tensor_file(const std::string& path) {
  FlatFile f = read_flat(path);
  const std::size_t expected = static_cast<std::size_t>(f.n_states) * f.n_actions * f.n_states;
  if (f.values.size() != expected) {
    throw std::runtime_error(path + ": expected " + std::to_string(expected) + " entries");
  }
  return TransitionTensor(f.n_states, f.n_actions, std::move(f.values));
}

TabularMdp read_mdp_file(const std::string& path) {
  FlatFile f = read_flat(path);
  const std::size_t tensor_size = static_cast<std::size_t>(f.n_states) * f.n_actions * f.n_states;
  std::vector<double> initial;
  if (f.values.size() == tensor_size) {
    initial.assign(f.n_states, 1.0 / f.n_states);
  } else if (f.values.size() == tensor_size + f.n_states) {
    initial.assign(f.values.begin() + static_cast<std::ptrdiff_t>(tensor_size), f.values.end());
    f.values.resize(tensor_size);
  } else {
    throw std::runtime_error(path + ": unexpected number of entries");
  }
  return TabularMdp(TransitionTensor(f.n_states, f.n_actions, std::move(f.values)),
                    std::move(initial));
}

}  // namespace odrl
