#include "odrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace odrl {

namespace {

void reject_unknown(const YAML::Node& node, const std::string& section,
                    const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError("section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) {
    try {
      out = node[key].as<T>();
    } catch (const YAML::Exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

Cell read_cell(const YAML::Node& node, const char* what) {
  if (!node.IsSequence() || node.size() != 2) {
    throw ConfigError(std::string(what) + " must be an [x, y] pair");
  }
  return {node[0].as<int>(), node[1].as<int>()};
}

void read_world(const YAML::Node& node, GridSpec& spec) {
  reject_unknown(node, "world",
                 {"preset", "width", "height", "slip_prob", "neighborhood", "blocked", "start", "goal"});
  if (node["preset"]) {
    const auto preset = node["preset"].as<std::string>();
    if (preset == "u_shaped") {
      spec = u_shaped_grid_spec();
    } else if (preset == "open") {
      spec = GridSpec{};
    } else {
      throw ConfigError("unknown world preset '" + preset + "'");
    }
  }
  read(node, "width", spec.width);
  read(node, "height", spec.height);
  read(node, "slip_prob", spec.slip_prob);
  if (node["neighborhood"]) {
    const auto n = node["neighborhood"].as<std::string>();
    if (n == "moore") {
      spec.neighborhood = SlipNeighborhood::moore;
    } else if (n == "von_neumann") {
      spec.neighborhood = SlipNeighborhood::von_neumann;
    } else {
      throw ConfigError("unknown neighborhood '" + n + "'");
    }
  }
  if (node["blocked"]) {
    if (!node["blocked"].IsSequence()) throw ConfigError("blocked must be a list of [x, y] pairs");
    spec.blocked_cells.clear();
    for (const auto& c : node["blocked"]) spec.blocked_cells.push_back(read_cell(c, "blocked cell"));
  }
  if (node["start"]) spec.start_cell = read_cell(node["start"], "start");
  if (node["goal"]) spec.goal_cell = read_cell(node["goal"], "goal");
}

void read_solver(const YAML::Node& node, SolverConfig& s) {
  reject_unknown(node, "solver",
                 {"entropy_weight", "prior_continue", "eval_tolerance", "max_eval_iters",
                  "max_outer_iters", "t_star", "eval_method", "convergence_tol"});
  read(node, "entropy_weight", s.entropy_weight);
  read(node, "prior_continue", s.prior_continue);
  read(node, "eval_tolerance", s.eval_tolerance);
  read(node, "max_eval_iters", s.max_eval_iters);
  read(node, "max_outer_iters", s.max_outer_iters);
  read(node, "t_star", s.t_star);
  read(node, "convergence_tol", s.convergence_tol);
  if (node["eval_method"]) {
    const auto m = node["eval_method"].as<std::string>();
    if (m == "direct") {
      s.eval_method = EvalMethod::direct;
    } else if (m == "iterative") {
      s.eval_method = EvalMethod::iterative;
    } else {
      throw ConfigError("unknown eval_method '" + m + "'");
    }
  }
}

void read_model(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown(node, "model", {"source", "mix_rate", "smoothing"});
  if (node["source"]) {
    const auto m = node["source"].as<std::string>();
    if (m == "mixing") {
      cfg.model_source = ModelSource::mixing;
    } else if (m == "exact") {
      cfg.model_source = ModelSource::exact;
    } else if (m == "frozen_uniform") {
      cfg.model_source = ModelSource::frozen_uniform;
    } else if (m == "neighbor_uniform") {
      cfg.model_source = ModelSource::neighbor_uniform;
    } else {
      throw ConfigError("unknown model source '" + m + "'");
    }
  }
  read(node, "mix_rate", cfg.mix_rate);
  read(node, "smoothing", cfg.model_smoothing);
}

void read_learner(const YAML::Node& node, LearnerConfig& l) {
  reject_unknown(node, "learner",
                 {"learning_rate", "relabel_prob", "relabel_count", "episodes", "horizon",
                  "batch_size", "updates_per_episode", "entropy_weight", "prior_continue",
                  "normalizer_rate", "normalize_rewards", "buffer_capacity", "model_smoothing",
                  "greedy_behavior", "eval_rollouts", "eval_horizon", "initial_q"});
  read(node, "learning_rate", l.learning_rate);
  read(node, "relabel_prob", l.relabel_prob);
  read(node, "relabel_count", l.relabel_count);
  read(node, "episodes", l.episodes);
  read(node, "horizon", l.horizon);
  read(node, "batch_size", l.batch_size);
  read(node, "updates_per_episode", l.updates_per_episode);
  read(node, "entropy_weight", l.entropy_weight);
  read(node, "prior_continue", l.prior_continue);
  read(node, "normalizer_rate", l.normalizer_rate);
  read(node, "normalize_rewards", l.normalize_rewards);
  read(node, "buffer_capacity", l.buffer_capacity);
  read(node, "model_smoothing", l.model_smoothing);
  read(node, "greedy_behavior", l.greedy_behavior);
  read(node, "eval_rollouts", l.eval_rollouts);
  read(node, "eval_horizon", l.eval_horizon);
  if (node["initial_q"]) {
    double v = 0.0;
    read(node, "initial_q", v);
    l.initial_q = v;
  }
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (solver.variant == Variant::fixed_time && solver.t_star < 1) {
    throw ConfigError("variant fixed_time requires solver.t_star >= 1");
  }
  if (solver.variant != Variant::fixed_time && solver.t_star != 0) {
    throw ConfigError("solver.t_star is only valid with variant fixed_time");
  }
  try {
    solver.validate();
    learner.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(mix_rate > 0.0 && mix_rate <= 1.0)) throw ConfigError("model.mix_rate must lie in (0, 1]");
  if (!(model_smoothing > 0.0)) throw ConfigError("model.smoothing must be positive");
  if (eval_rollouts < 1 || eval_horizon < 1) throw ConfigError("evaluation counts must be positive");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  cfg.source_text = text;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("configuration root must be a mapping");
  try {
    reject_unknown(root, "root",
                   {"world", "solver", "model", "learner", "evaluation", "variant", "seeds", "output"});
    if (root["world"]) read_world(root["world"], cfg.world);
    if (root["solver"]) read_solver(root["solver"], cfg.solver);
    if (root["model"]) read_model(root["model"], cfg);
    if (root["learner"]) read_learner(root["learner"], cfg.learner);
    if (root["evaluation"]) {
      reject_unknown(root["evaluation"], "evaluation", {"rollouts", "horizon"});
      read(root["evaluation"], "rollouts", cfg.eval_rollouts);
      read(root["evaluation"], "horizon", cfg.eval_horizon);
    }
    if (root["seeds"]) {
      if (!root["seeds"].IsSequence()) throw ConfigError("seeds must be a list of integers");
      cfg.seeds.clear();
      for (const auto& s : root["seeds"]) cfg.seeds.push_back(s.as<std::uint64_t>());
    }
    read(root, "output", cfg.out_dir);
    if (root["variant"]) cfg.variant_name = root["variant"].as<std::string>();
    cfg.solver.variant = parse_variant(cfg.variant_name);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

void apply_variant(RunConfig& cfg, const std::string& name) {
  try {
    cfg.solver.variant = parse_variant(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.variant_name = name;
  cfg.validate();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

}  // namespace odrl
