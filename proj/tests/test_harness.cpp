#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "sl2flow/errors.hpp"
#include "sl2flow/harness.hpp"

using namespace sl2flow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sl2flow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SL2FLOW_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, AppliesKnownKeys) {
  RunConfig c;
  apply_config_json(c, R"({"seed": 7, "eps": 0.3, "x": [4, 0], "criteria": [1, 4]})");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.eps, 0.3);
  EXPECT_EQ(c.x[0], 4.0);
  EXPECT_EQ(c.criteria.size(), 2u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  RunConfig c;
  EXPECT_THROW(apply_config_json(c, R"({"sead": 7})"), ConfigError);
  EXPECT_THROW(apply_config_json(c, R"({"eps": "half"})"), ConfigError);
  EXPECT_THROW(apply_config_json(c, "not json"), ConfigError);
  EXPECT_THROW(apply_config_json(c, "[1, 2]"), ConfigError);
}

TEST(Config, ValidateRanges) {
  RunConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.L = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.criteria = {13};
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.x = {1.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Acceptance, ReportStructure) {
  RunConfig c;
  c.criteria = {1, 4};
  const auto results = run_acceptance(c);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].id, 1);
  EXPECT_EQ(results[1].id, 4);
  for (const auto& r : results) {
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(r.reports.empty());
    EXPECT_EQ(criterion_line(r).rfind("criterion " + std::to_string(r.id) + " PASS", 0), 0u);
  }
  const auto j = nlohmann::json::parse(acceptance_report_json(results));
  ASSERT_TRUE(j.is_array());
  for (const auto& rec : j) {
    EXPECT_TRUE(rec.contains("criterion"));
    EXPECT_TRUE(rec.contains("name"));
    EXPECT_TRUE(rec.contains("n_samples"));
    EXPECT_TRUE(rec.contains("mean"));
    EXPECT_TRUE(rec.contains("std_error"));
    EXPECT_TRUE(rec.contains("pass"));
  }
}

TEST(Acceptance, NonCanonicalCovarianceFails) {
  // kappa_sym = 1/2, kappa_skew = 0 keeps E|F|^2 but not the law of R.
  RunConfig c;
  c.out = scratch_dir("negative").string();
  c.kappa_sym = 0.5;
  c.kappa_skew = 0.0;
  c.criteria = {3};
  std::ostringstream log;
  EXPECT_EQ(command_accept(c, log), 1);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "acceptance_report.json"));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("--out " + dir.string() + " sl2-sim"), 0);
  EXPECT_TRUE(fs::exists(dir / "sl2_sim.csv"));

  const auto bad = dir / "bad.json";
  std::ofstream(bad) << R"({"no_such_key": 1})";
  EXPECT_EQ(run_cli("--config " + bad.string() + " sl2-sim"), 2);
  EXPECT_EQ(run_cli("--dt -1 sl2-sim"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);

  const auto huge = dir / "huge.json";
  std::ofstream(huge) << R"({"pde_dt": 1000.0, "out": ")" << dir.string() << R"("})";
  EXPECT_EQ(run_cli("--config " + huge.string() + " pde-run"), 3);
}

TEST(Cli, OutputIndependentOfWorkerCount) {
  const auto a = scratch_dir("w1");
  const auto b = scratch_dir("w4");
  const auto cfg = a / "small.json";
  std::ofstream(cfg) << R"({"n_paths": 400, "tau_end": 0.5, "dt": 0.01})";
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --workers 1 --out " + a.string() + " sl2-sim"), 0);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --workers 4 --out " + b.string() + " sl2-sim"), 0);
  const auto x = slurp(a / "sl2_sim.csv");
  EXPECT_FALSE(x.empty());
  EXPECT_EQ(x, slurp(b / "sl2_sim.csv"));
}
