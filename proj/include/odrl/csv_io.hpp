#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odrl/gridworld.hpp"
#include "odrl/learner.hpp"
#include "odrl/solver.hpp"
#include "odrl/variational_time.hpp"

namespace odrl {

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double v);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// iteration,objective_start,objective_after_q,objective,eval_residual,policy_change,greedy_success
void write_iteration_csv(const std::string& path, const std::vector<IterationRecord>& log);

/// x,y,value for every free cell, in state order.
void write_heatmap_csv(const std::string& path, const GridWorld& world,
                       const Eigen::VectorXd& values);

/// state,value
void write_state_values_csv(const std::string& path, const Eigen::VectorXd& values);
Eigen::VectorXd read_state_values_csv(const std::string& path);

/// state,action,<column>
void write_state_action_csv(const std::string& path, const Eigen::MatrixXd& table,
                            const std::string& column);

/// episode,env_steps,greedy_success,normalized_final_distance,mean_q_cont,var_q_cont
void write_curve_csv(const std::string& path, const std::vector<CurveRow>& curve);
std::vector<CurveRow> read_curve_csv(const std::string& path);

/// episode,env_steps,<metric>_mean,<metric>_median,<metric>_std for greedy_success,
/// normalized_final_distance and mean_q_cont. Curves must share their episode column.
void write_aggregate_csv(const std::string& path, const std::vector<std::vector<CurveRow>>& curves);

struct ManifestRow {
  std::string file;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::string code_version;
};

/// file,config_hash,seed,wall_time_s,code_version
void write_manifest_csv(const std::string& path, const std::vector<ManifestRow>& rows);

/// Version string compiled into the library.
const char* code_version();

}  // namespace odrl
