#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace odrl {

/// Both sides of one checked identity (or a measured quantity next to its bound).
struct IdentityRecord {
  int instance = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  double max_gap = 0.0;
  double tolerance = 0.0;
  int instances = 0;
  std::string detail;
  std::uint64_t seed = 0;  // the suite's RNG seed; instances are drawn in order from it
  std::vector<IdentityRecord> records;
};

struct VerifyOptions {
  /// Sign of the policy KL used by the solver side of every check. +1 is a fault injection.
  double kl_sign = -1.0;
  std::uint64_t seed = 20240601;
};

/// Names accepted by run_suites, in execution order.
const std::vector<std::string>& suite_names();

/// Survival identity and KL decomposition over random continuation sequences.
SuiteResult suite_lemmas(const VerifyOptions& opt);
/// Oracle F versus solver V^pi(s0) on random MDPs.
SuiteResult suite_objective(const VerifyOptions& opt);
/// Literal KL(q || posterior) versus -F + C.
SuiteResult suite_kl(const VerifyOptions& opt);
/// Closed-form continuation versus the grid argmax, plus concavity.
SuiteResult suite_optimal_q(const VerifyOptions& opt);
/// Backup contraction ratio, monotone ODPE residuals, iterative versus direct evaluation.
SuiteResult suite_contraction(const VerifyOptions& opt);
/// Per-step monotonicity of policy iteration on random MDPs and a small grid.
SuiteResult suite_monotone(const VerifyOptions& opt);
/// Full backup with q = p = gamma versus the simplified backup.
SuiteResult suite_simplified(const VerifyOptions& opt);
/// Fixed-time chain walk and enumeration cross-check.
SuiteResult suite_fixed_time(const VerifyOptions& opt);

/// `selector` is "all" or a comma-separated list of suite names. Throws std::invalid_argument
/// for unknown names.
std::vector<SuiteResult> run_suites(const std::string& selector, const VerifyOptions& opt);

/// suite,seed,instance,lhs,rhs,gap for every record of every suite.
void write_verify_report(const std::string& path, const std::vector<SuiteResult>& results);

}  // namespace odrl
