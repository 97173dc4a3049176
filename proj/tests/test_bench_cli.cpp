#include "gpcpd/bench.hpp"
#include "gpcpd/cli.hpp"
#include "gpcpd/errors.hpp"
#include "gpcpd/fixtures.hpp"
#include "gpcpd/io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gpcpd;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gpcpd_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gpcpd");
  std::vector<char*> argv;
  for (auto& a : args)
    argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST(BenchConfig, ParsesInstancesAndDefaults) {
  const auto j = nlohmann::json::parse(R"({
    "instances": [{"dims": [9, 4, 4], "rank": 9, "count": 2}, {"fixture": "example41", "count": 1}],
    "seed": 5, "methods": ["ts", "als"], "distribution": "factor-means"})");
  const BenchConfig cfg = BenchConfig::from_json(j);
  ASSERT_EQ(cfg.instances.size(), 2u);
  EXPECT_EQ(cfg.instances[0].label(), "9x4x4");
  EXPECT_EQ(cfg.instances[1].fixture, "example41");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.methods.size(), 2u);
  EXPECT_EQ(cfg.distribution, Distribution::FactorMeans);
  EXPECT_DOUBLE_EQ(cfg.time_limit, 60.0);
}

TEST(BenchConfig, RejectsBadValues) {
  EXPECT_ANY_THROW(BenchConfig::from_json(nlohmann::json::parse(R"({"instances": [], "methods": ["newton"]})")));
  EXPECT_ANY_THROW(
      BenchConfig::from_json(nlohmann::json::parse(R"({"instances": [{"dims": [9, 4], "rank": 9}]})")));
  EXPECT_ANY_THROW(BenchConfig::from_json(
      nlohmann::json::parse(R"({"instances": [{"dims": [9, 4, 4], "rank": 9}], "time_limit": -1})")));
}

TEST(BenchConfig, WorkerOverrideFromEnvironment) {
  BenchConfig cfg;
  cfg.workers = 3;
  ::unsetenv(kWorkersEnv);
  EXPECT_EQ(effective_workers(cfg), 3);
  ::setenv(kWorkersEnv, "2", 1);
  EXPECT_EQ(effective_workers(cfg), 2);
  ::unsetenv(kWorkersEnv);
}

TEST(Benchmark, AggregatesRowsPerSpecAndMethod) {
  BenchConfig cfg;
  InstanceSpec spec;
  spec.dims = {6, 4, 3};
  spec.rank = 5;
  spec.count = 3;
  cfg.instances = {spec};
  cfg.methods = {"ts", "als"};
  cfg.seed = 1;
  const RunReport rep = run_benchmark(cfg);
  ASSERT_EQ(rep.runs.size(), 6u);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const AggregateRow& row : rep.rows) {
    EXPECT_EQ(row.dims, "6x4x3");
    EXPECT_EQ(row.runs, 3);
    EXPECT_GE(row.s_rate, 0.0);
    EXPECT_LE(row.s_rate, 1.0);
  }
  EXPECT_GE(rep.rows[0].s_rate, 2.0 / 3.0);
  const std::string csv = rep.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dims,rank,method,time,error,s_rate");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const nlohmann::json j = rep.to_json();
  EXPECT_EQ(j["runs"].size(), 6u);
  EXPECT_EQ(run_benchmark(cfg).runs[2].seed, rep.runs[2].seed);
}

TEST(Benchmark, NoSuccessPrintsNan) {
  RunReport rep;
  AggregateRow row;
  row.dims = "4x2x2";
  row.rank = 2;
  row.method = "ts";
  row.time = std::numeric_limits<double>::quiet_NaN();
  row.error = std::numeric_limits<double>::quiet_NaN();
  rep.rows.push_back(row);
  EXPECT_NE(rep.to_csv().find("4x2x2,2,ts,nan,nan,0"), std::string::npos);
}

TEST(Cli, FixtureThenDecompose) {
  const auto dir = scratch_dir("fixture");
  EXPECT_EQ(run_cli({"fixture", "--name", "example41", "--out", dir.string()}), 0);
  ASSERT_TRUE(std::filesystem::exists(dir / "example41.json"));
  ASSERT_TRUE(std::filesystem::exists(dir / "example41_factors.json"));
  EXPECT_EQ(read_factors((dir / "example41_factors.json").string()).rank(), 5);
  const auto out = dir / "factors.json";
  EXPECT_EQ(run_cli({"decompose", "--input", (dir / "example41.json").string(), "--rank", "5", "--seed", "3",
                     "--output", out.string()}),
            0);
  const FactorTriple f = read_factors(out.string());
  EXPECT_LE(relative_error(fixture_example41().tensor, f), 1e-6);
}

TEST(Cli, UsageAndInputErrorsExitTwo) {
  const auto dir = scratch_dir("errors");
  write_tensor((dir / "t.json").string(), fixture_example41().tensor);
  EXPECT_EQ(run_cli({}), 2);
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"decompose", "--input", (dir / "t.json").string()}), 2);
  EXPECT_EQ(run_cli({"decompose", "--input", (dir / "t.json").string(), "--rank", "99"}), 2);
  EXPECT_EQ(run_cli({"decompose", "--input", (dir / "missing.json").string(), "--rank", "5"}), 2);
  EXPECT_EQ(run_cli({"fixture", "--name", "example43"}), 2);
  EXPECT_EQ(run_cli({"bench", "--config", (dir / "missing.json").string(), "--out", "x.csv"}), 2);
}

TEST(Cli, UnreachableRankExitsOne) {
  // A generic 4x2x2 tensor has rank above 2, so no rank-2 fit reaches the threshold.
  const auto dir = scratch_dir("fail");
  write_tensor((dir / "t.json").string(), oracle::planted(4, 2, 2, 4, 3).tensor);
  EXPECT_EQ(run_cli({"decompose", "--input", (dir / "t.json").string(), "--rank", "2"}), 1);
}

TEST(Cli, BenchWritesCsvAndJson) {
  const auto dir = scratch_dir("bench");
  std::ofstream(dir / "cfg.json") << R"({"instances": [{"fixture": "example41", "count": 2}], "seed": 2})";
  EXPECT_EQ(run_cli({"bench", "--config", (dir / "cfg.json").string(), "--out", (dir / "r.csv").string()}), 0);
  const std::string csv = slurp(dir / "r.csv");
  EXPECT_EQ(csv.rfind("dims,rank,method,time,error,s_rate\n5x3x3,5,ts,", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "r.json"));
  EXPECT_EQ(run_cli({"bench", "--config", (dir / "cfg.json").string(), "--out", (dir / "r2.json").string()}), 0);
  EXPECT_EQ(read_json_file((dir / "r2.json").string())["rows"].size(), 1u);
}

TEST(Cli, JacobianChecksPass) {
  const JacobianCheckSummary s = run_jacobian_checks(4, 2, 5);
  EXPECT_LE(s.max_fQ, 1e-6);
  EXPECT_LE(s.max_g, 1e-6);
  EXPECT_EQ(s.points, 2 * 5);
}
