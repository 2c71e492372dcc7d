#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "odrl/csv_io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = ODRL_CLI;
const std::string kConfigs = ODRL_CONFIG_DIR;

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "odrl_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli_output.txt";
  const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

fs::path small_learn_config(const fs::path& dir) {
  const fs::path p = dir / "learn_small.yaml";
  std::ofstream(p) << "world:\n  preset: u_shaped\n"
                      "learner:\n  episodes: 4\n  updates_per_episode: 5\n  eval_rollouts: 5\n"
                      "seeds: [0, 1, 2, 3, 4]\n";
  return p;
}

TEST(Cli, MissingConfigExitsWithConfigErrorNamingThePath) {
  const fs::path dir = workdir("missing");
  const std::string path = (dir / "no_such.yaml").string();
  const CliRun r = run_cli("solve --config " + path, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(path), std::string::npos) << r.output;
}

TEST(Cli, MalformedConfigExitsWithConfigError) {
  const fs::path dir = workdir("malformed");
  const fs::path p = dir / "bad.yaml";
  std::ofstream(p) << "solver:\n  unknown_knob: 3\n";
  const CliRun r = run_cli("solve --config " + p.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("unknown_knob"), std::string::npos) << r.output;
  EXPECT_EQ(run_cli("solve --config " + p.string() + " --seeds 1,x", dir).code, 2);
}

TEST(Cli, SolveIsByteIdenticalAcrossRuns) {
  const fs::path dir = workdir("solve_twice");
  const std::string cfg = kConfigs + "/u_grid_solve.yaml";
  ASSERT_EQ(run_cli("solve --config " + cfg + " --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run_cli("solve --config " + cfg + " --out " + (dir / "b").string(), dir).code, 0);
  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.csv") continue;
    const fs::path twin = dir / "b" / fs::relative(entry.path(), dir / "a");
    EXPECT_EQ(slurp(entry.path()), slurp(twin)) << entry.path();
    ++compared;
  }
  EXPECT_GE(compared, 10);
  // Manifests differ only in the wall-time column.
  const auto ma = lines_of(dir / "a" / "manifest.csv");
  const auto mb = lines_of(dir / "b" / "manifest.csv");
  ASSERT_EQ(ma.size(), mb.size());
  for (std::size_t i = 1; i < ma.size(); ++i) {
    auto fa = split(ma[i]);
    auto fb = split(mb[i]);
    ASSERT_EQ(fa.size(), 5u);
    fa[3] = fb[3] = "";
    EXPECT_EQ(fa, fb);
  }
}

TEST(Cli, SolveWritesHeatmapsAndAManifestRowPerFile) {
  const fs::path dir = workdir("solve_outputs");
  const std::string cfg = kConfigs + "/u_grid_solve.yaml";
  const CliRun r = run_cli("solve --config " + cfg + " --seeds 4 --out " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.output;
  const fs::path seed_dir = dir / "out" / "seed_4";
  for (const char* name : {"heatmap_sparse_reward.csv", "heatmap_reward_init.csv",
                           "heatmap_reward_final.csv", "heatmap_value_final.csv",
                           "heatmap_q_cont_final.csv", "iterations.csv", "values.csv",
                           "q_table.csv", "q_cont.csv", "policy.csv"}) {
    EXPECT_TRUE(fs::exists(seed_dir / name)) << name;
  }
  const auto heat = lines_of(seed_dir / "heatmap_sparse_reward.csv");
  ASSERT_EQ(heat.size(), 55u);
  int nonzero = 0;
  for (std::size_t i = 1; i < heat.size(); ++i) nonzero += std::stod(split(heat[i])[2]) != 0.0;
  EXPECT_EQ(nonzero, 1);

  std::set<std::string> listed;
  const std::string hash = odrl::fnv1a_hex(slurp(cfg));
  const auto manifest = lines_of(dir / "out" / "manifest.csv");
  EXPECT_EQ(manifest[0], "file,config_hash,seed,wall_time_s,code_version");
  for (std::size_t i = 1; i < manifest.size(); ++i) {
    const auto f = split(manifest[i]);
    listed.insert(f[0]);
    EXPECT_EQ(f[1], hash);
    EXPECT_EQ(f[2], "4");
    EXPECT_TRUE(fs::exists(dir / "out" / f[0])) << f[0];
  }
  for (const auto& entry : fs::directory_iterator(seed_dir)) {
    EXPECT_TRUE(listed.count("seed_4/" + entry.path().filename().string())) << entry.path();
  }
}

TEST(Cli, LearnWritesOneCurvePerSeedAndAConsistentAggregate) {
  const fs::path dir = workdir("learn");
  const fs::path cfg = small_learn_config(dir);
  const CliRun r = run_cli("learn --config " + cfg.string() + " --out " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.output;
  std::vector<std::vector<odrl::CurveRow>> curves;
  for (int s = 0; s < 5; ++s) {
    curves.push_back(
        odrl::read_curve_csv((dir / "out" / ("curve_seed_" + std::to_string(s) + ".csv")).string()));
    ASSERT_EQ(curves.back().size(), 5u);
  }
  const auto agg = lines_of(dir / "out" / "aggregate.csv");
  ASSERT_EQ(agg.size(), 6u);
  for (std::size_t e = 0; e < 5; ++e) {
    const auto f = split(agg[e + 1]);
    double mean = 0.0;
    for (const auto& c : curves) mean += c[e].greedy_success / 5.0;
    EXPECT_NEAR(std::stod(f[2]), mean, 1e-12);
    double dist = 0.0;
    for (const auto& c : curves) dist += c[e].normalized_final_distance / 5.0;
    EXPECT_NEAR(std::stod(f[5]), dist, 1e-12);
  }
  const auto manifest = lines_of(dir / "out" / "manifest.csv");
  EXPECT_EQ(manifest.size(), 7u);

  const CliRun sparse = run_cli("learn --config " + cfg.string() + " --variant sparse_baseline --seeds 2 --out " +
                             (dir / "sparse").string(),
                         dir);
  EXPECT_EQ(sparse.code, 0) << sparse.output;
  EXPECT_TRUE(fs::exists(dir / "sparse" / "curve_seed_2.csv"));
  EXPECT_EQ(run_cli("learn --config " + cfg.string() + " --variant simplified", dir).code, 2);
}

TEST(Cli, LearnIsDeterministicPerSeed) {
  const fs::path dir = workdir("learn_twice");
  const fs::path cfg = small_learn_config(dir);
  ASSERT_EQ(run_cli("learn --config " + cfg.string() + " --seeds 3 --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run_cli("learn --config " + cfg.string() + " --seeds 3 --out " + (dir / "b").string(), dir).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "curve_seed_3.csv"), slurp(dir / "b" / "curve_seed_3.csv"));
  EXPECT_EQ(slurp(dir / "a" / "aggregate.csv"), slurp(dir / "b" / "aggregate.csv"));
}

TEST(Cli, VerifySelectsSuitesAndWritesAReport) {
  const fs::path dir = workdir("verify");
  const fs::path report = dir / "report.csv";
  const CliRun r = run_cli("verify --suite lemmas --report " + report.string(), dir);
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("lemmas"), std::string::npos);
  EXPECT_EQ(r.output.find("objective"), std::string::npos);
  const auto rows = lines_of(report);
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], "suite,seed,instance,lhs,rhs,gap");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(split(rows[i])[0], "lemmas");
  EXPECT_EQ(run_cli("verify --suite no_such_suite", dir).code, 2);
}

TEST(Cli, InjectedKlSignFaultFailsTheObjectiveIdentity) {
  const fs::path dir = workdir("fault");
  const CliRun r = run_cli("verify --suite objective --inject-fault kl-sign", dir);
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
}

TEST(Cli, HeatmapRerendersASavedValueTable) {
  const fs::path dir = workdir("heatmap");
  const std::string cfg = kConfigs + "/u_grid_solve.yaml";
  ASSERT_EQ(run_cli("solve --config " + cfg + " --out " + (dir / "out").string(), dir).code, 0);
  const fs::path values = dir / "out" / "seed_0" / "values.csv";
  const fs::path out = dir / "rendered.csv";
  const CliRun r = run_cli("heatmap --config " + cfg + " --values " + values.string() + " --out " + out.string(), dir);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(out), slurp(dir / "out" / "seed_0" / "heatmap_value_final.csv"));

  const fs::path wrong = dir / "wrong.csv";
  std::ofstream(wrong) << "state,value\n0,1\n1,2\n";
  EXPECT_EQ(run_cli("heatmap --config " + cfg + " --values " + wrong.string() + " --out " + out.string(), dir).code,
            2);
}

TEST(Cli, UsageErrorsAreReported) {
  const fs::path dir = workdir("usage");
  EXPECT_NE(run_cli("", dir).code, 0);
  EXPECT_NE(run_cli("solve", dir).code, 0);
}

}  // namespace
