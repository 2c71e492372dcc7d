// odrl: solve, learn, verify and heatmap subcommands.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "odrl/config.hpp"
#include "odrl/csv_io.hpp"
#include "odrl/experiment.hpp"
#include "odrl/learner.hpp"
#include "odrl/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seeds;
  std::string variant;
  std::string fault;
};

odrl::RunConfig load(const CommonFlags& f) {
  odrl::RunConfig cfg = odrl::load_run_config(f.config);
  if (!f.seeds.empty()) cfg.seeds = odrl::parse_seed_list(f.seeds);
  if (!f.variant.empty()) odrl::apply_variant(cfg, f.variant);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.fault == "kl-sign") {
    cfg.solver.kl_sign = 1.0;
  } else if (!f.fault.empty()) {
    throw odrl::ConfigError("unknown fault '" + f.fault + "'");
  }
  return cfg;
}

/// Runs job(i) for i in [0, n) on up to hardware_concurrency workers.
template <typename Job>
void fan_out(std::size_t n, Job job) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int cmd_solve(const CommonFlags& flags) {
  const odrl::RunConfig cfg = load(flags);
  const std::string hash = odrl::fnv1a_hex(cfg.source_text);
  std::vector<std::optional<odrl::SolveOutput>> slots(cfg.seeds.size());
  fan_out(cfg.seeds.size(), [&](std::size_t i) { slots[i] = odrl::run_solve(cfg, cfg.seeds[i]); });

  std::vector<odrl::ManifestRow> manifest;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const odrl::SolveOutput& out = *slots[i];
    const std::string sub = "seed_" + std::to_string(cfg.seeds[i]);
    for (const auto& file : odrl::write_solve_outputs(out, (fs::path(cfg.out_dir) / sub).string())) {
      manifest.push_back({sub + "/" + file, hash, cfg.seeds[i], out.wall_time_s, odrl::code_version()});
    }
    std::cout << "seed " << cfg.seeds[i] << ": variant " << cfg.variant_name;
    if (out.iteration) {
      std::cout << ", iterations " << out.iteration->log.size()
                << (out.iteration->converged ? " (converged)" : "")
                << ", objective " << out.iteration->log.back().objective_after_pi;
      if (out.iteration->monotonicity_violation >= 0) {
        std::cout << ", monotonicity violated at iteration " << out.iteration->monotonicity_violation;
      }
    }
    std::cout << ", greedy success " << out.greedy_success << ", " << out.wall_time_s << " s\n";
  }
  odrl::write_manifest_csv((fs::path(cfg.out_dir) / "manifest.csv").string(), manifest);
  return 0;
}

int cmd_learn(const CommonFlags& flags) {
  odrl::RunConfig cfg = load(flags);
  if (cfg.solver.variant == odrl::Variant::sparse_indicator) {
    cfg.learner.reward = odrl::RewardKind::sparse;
  } else if (cfg.solver.variant != odrl::Variant::full) {
    throw odrl::ConfigError("learn supports variants full and sparse_baseline");
  }
  const std::string hash = odrl::fnv1a_hex(cfg.source_text);
  const odrl::GridWorld world = odrl::build_gridworld(cfg.world);
  std::vector<std::vector<odrl::CurveRow>> curves(cfg.seeds.size());
  std::vector<double> times(cfg.seeds.size());
  std::vector<int> reached(cfg.seeds.size());
  fan_out(cfg.seeds.size(), [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const odrl::LearningResult res = odrl::run_learning(world, cfg.learner, cfg.seeds[i]);
    curves[i] = res.curve;
    reached[i] = res.episodes_to_success(0.9);
    times[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  fs::create_directories(cfg.out_dir);
  std::vector<odrl::ManifestRow> manifest;
  double total_time = 0.0;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const std::string name = "curve_seed_" + std::to_string(cfg.seeds[i]) + ".csv";
    odrl::write_curve_csv((fs::path(cfg.out_dir) / name).string(), curves[i]);
    manifest.push_back({name, hash, cfg.seeds[i], times[i], odrl::code_version()});
    total_time += times[i];
    std::cout << "seed " << cfg.seeds[i] << ": final greedy success "
              << curves[i].back().greedy_success << ", episodes to 0.9 success "
              << reached[i] << ", " << times[i] << " s\n";
  }
  odrl::write_aggregate_csv((fs::path(cfg.out_dir) / "aggregate.csv").string(), curves);
  manifest.push_back({"aggregate.csv", hash, cfg.seeds.front(), total_time, odrl::code_version()});
  odrl::write_manifest_csv((fs::path(cfg.out_dir) / "manifest.csv").string(), manifest);
  return 0;
}

int cmd_verify(const std::string& suite, const std::string& fault, const std::string& report) {
  odrl::VerifyOptions opt;
  if (fault == "kl-sign") {
    opt.kl_sign = 1.0;
  } else if (!fault.empty()) {
    throw odrl::ConfigError("unknown fault '" + fault + "'");
  }
  std::vector<odrl::SuiteResult> results;
  try {
    results = odrl::run_suites(suite, opt);
  } catch (const std::invalid_argument& e) {
    throw odrl::ConfigError(e.what());
  }
  if (!report.empty()) odrl::write_verify_report(report, results);
  bool all = true;
  std::printf("%-12s %-6s %10s %10s %6s  %s\n", "suite", "status", "max_gap", "tolerance", "cases",
              "detail");
  for (const auto& r : results) {
    std::printf("%-12s %-6s %10.3e %10.3e %6d  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                r.max_gap, r.tolerance, r.instances, r.detail.c_str());
    all = all && r.passed;
  }
  return all ? 0 : kExitFailure;
}

int cmd_heatmap(const std::string& config, const std::string& values, const std::string& out) {
  const odrl::RunConfig cfg = odrl::load_run_config(config);
  const odrl::GridWorld world = odrl::build_gridworld(cfg.world);
  Eigen::VectorXd v;
  try {
    v = odrl::read_state_values_csv(values);
  } catch (const std::exception& e) {
    throw odrl::ConfigError(e.what());
  }
  if (v.size() != world.num_states()) {
    throw odrl::ConfigError("value table has " + std::to_string(v.size()) + " states, world has " +
                            std::to_string(world.num_states()));
  }
  odrl::write_heatmap_csv(out, world, v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outcome-driven tabular solver, learner and verification suites"};
  app.require_subcommand(1);

  CommonFlags solve_flags, learn_flags;
  auto add_common = [](CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "YAML run configuration")->required();
    sub->add_option("--out", f.out, "output directory (overrides the config)");
    sub->add_option("--seeds", f.seeds, "comma-separated seeds (overrides the config)");
    sub->add_option("--variant", f.variant,
                    "full, fixed_qT, simplified, fixed_time or sparse_baseline");
    sub->add_option("--inject-fault", f.fault)->group("");
  };
  CLI::App* solve = app.add_subcommand("solve", "exact policy iteration per seed");
  add_common(solve, solve_flags);
  CLI::App* learn = app.add_subcommand("learn", "sample-based learner per seed");
  add_common(learn, learn_flags);

  std::string suite = "all", verify_fault, verify_report;
  CLI::App* verify = app.add_subcommand("verify", "oracle identity and lemma suites");
  verify->add_option("--suite", suite, "all, or a comma-separated list of suite names");
  verify->add_option("--report", verify_report, "write every checked identity to this CSV");
  verify->add_option("--inject-fault", verify_fault)->group("");

  std::string hm_config, hm_values, hm_out;
  CLI::App* heatmap = app.add_subcommand("heatmap", "re-render a saved value table by grid cell");
  heatmap->add_option("--config", hm_config, "YAML run configuration")->required();
  heatmap->add_option("--values", hm_values, "state,value CSV")->required();
  heatmap->add_option("--out", hm_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_flags);
    if (learn->parsed()) return cmd_learn(learn_flags);
    if (verify->parsed()) return cmd_verify(suite, verify_fault, verify_report);
    if (heatmap->parsed()) return cmd_heatmap(hm_config, hm_values, hm_out);
  } catch (const odrl::ConfigError& e) {
    std::cerr << "odrl: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "odrl: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
