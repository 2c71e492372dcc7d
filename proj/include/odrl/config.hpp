#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "odrl/gridworld.hpp"
#include "odrl/learner.hpp"
#include "odrl/solver.hpp"

namespace odrl {

/// Raised for unreadable or malformed configuration files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the exact solver obtains its dynamics model.
enum class ModelSource {
  mixing,            // uniform start, one mixing step toward the truth per outer iteration
  exact,             // smoothed copy of the true dynamics, frozen
  frozen_uniform,    // uniform rows, frozen
  neighbor_uniform,  // uniform over the slip neighbourhood, frozen
};

struct RunConfig {
  GridSpec world;
  SolverConfig solver;
  LearnerConfig learner;
  std::string variant_name = "full";
  ModelSource model_source = ModelSource::mixing;
  double mix_rate = 0.01;
  double model_smoothing = 1e-3;
  int eval_rollouts = 1000;
  int eval_horizon = 100;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";
  std::string source_text;  // raw file contents, hashed into manifests

  /// Checks the cross-field rules (at least one seed, t_star iff fixed_time).
  void validate() const;
};

/// Parses YAML text. Unknown keys are rejected. Throws ConfigError.
RunConfig parse_run_config(const std::string& text);
/// Reads and parses `path`. Throws ConfigError naming the path when it cannot be read.
RunConfig load_run_config(const std::string& path);

/// Applies a --variant override, re-validating variant-specific fields.
void apply_variant(RunConfig& cfg, const std::string& name);

/// Comma-separated seed list, e.g. "0,1,2".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace odrl
