#include "condu/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace condu;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test
{
protected:
  void SetUp() override
  {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("condu_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content)
  {
    const auto p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }

  static std::string slurp(const fs::path& p)
  {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run_cmd(CliConfig cli)
  {
    out_.str("");
    err_.str("");
    return run(cli, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* small_config = R"({
  "dgp": {
    "x": { "law": "uniform" },
    "regression": { "kind": "sine", "amplitude": 1.0, "frequency": 1.0 },
    "noise": { "kind": "gaussian", "scale": 0.3 }
  },
  "kernel": { "id": "epanechnikov-rescaled" },
  "function_class": { "m": 2, "members": ["sum", "product"] },
  "regime": { "kind": "unbounded", "p": 3, "c": 0.1, "b0": 0.2 },
  "grids": { "n_list": [150, 300], "interval": [0.3, 0.7], "points_per_axis": 3, "eta": 0.25 },
  "experiment": { "reps": 1, "seed": 17, "n": 150 }
})";

std::size_t
count_lines(const std::string& s)
{
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST_F(CliTest, VerifyPassesAndListsChecks)
{
  EXPECT_EQ(run_cmd({ .command = "verify" }), exit_code::ok) << out_.str();
  const auto list = json::parse(out_.str());
  ASSERT_TRUE(list.is_array());
  EXPECT_GT(list.size(), 10u);
  for (const auto& r : list) {
    EXPECT_TRUE(r.at("pass").get<bool>()) << r.dump();
    EXPECT_TRUE(r.contains("check") && r.contains("residual") && r.contains("tolerance"));
  }
}

TEST_F(CliTest, VerifyFilter)
{
  EXPECT_EQ(run_cmd({ .command = "verify", .filter = "bandwidth" }), exit_code::ok);
  for (const auto& r : json::parse(out_.str()))
    EXPECT_EQ(r.at("check").get<std::string>().rfind("bandwidth.", 0), 0u);
  EXPECT_EQ(run_cmd({ .command = "verify", .filter = "no-such-suite" }), exit_code::validation);
}

TEST_F(CliTest, MissingKernelIdNamesTheField)
{
  auto doc = json::parse(small_config);
  doc["kernel"].erase("id");
  const auto cfg = write("bad.json", doc.dump());
  EXPECT_EQ(run_cmd({ .command = "simulate", .config_path = cfg, .out_dir = dir_ }), exit_code::validation);
  const auto e = json::parse(err_.str());
  EXPECT_EQ(e.at("field"), "kernel.id");
  EXPECT_EQ(e.at("error"), "ConfigError");
}

TEST_F(CliTest, MalformedJsonIsAValidationError)
{
  const auto cfg = write("bad.json", "{ not json");
  EXPECT_EQ(run_cmd({ .command = "rates", .config_path = cfg, .out_dir = dir_ }), exit_code::validation);
  EXPECT_NO_THROW(json::parse(err_.str()));
}

TEST_F(CliTest, SimulateThenEstimateRowCount)
{
  const auto cfg = write("c.json", small_config);
  ASSERT_EQ(run_cmd({ .command = "simulate", .config_path = cfg, .out_dir = dir_ }), exit_code::ok) << err_.str();
  const auto sample = ingest_csv(dir_ / "sample.csv");
  EXPECT_EQ(sample.size(), 150u);

  const auto est_dir = dir_ / "est";
  fs::create_directories(est_dir);
  ASSERT_EQ(run_cmd({ .command = "estimate", .config_path = cfg, .data_path = dir_ / "sample.csv", .out_dir = est_dir }),
            exit_code::ok)
    << err_.str();
  const auto table = slurp(est_dir / "estimates.csv");
  const auto parsed = parse_config(json::parse(small_config));
  const std::size_t expected = sweep_bandwidths(parsed, 150).size() * 9 * 2;
  EXPECT_EQ(count_lines(table), expected + 1);
  EXPECT_EQ(table.substr(0, table.find('\n')), "m,h,t_1,t_2,phi,numerator,denominator,mhat,status");
  EXPECT_TRUE(fs::exists(est_dir / "config_echo.json"));
}

TEST_F(CliTest, SimulateRoundTripsAtFullPrecision)
{
  const auto cfg = write("c.json", small_config);
  ASSERT_EQ(run_cmd({ .command = "simulate", .config_path = cfg, .out_dir = dir_ }), exit_code::ok);
  const auto parsed = parse_config(json::parse(small_config));
  const Sample direct = simulate(parsed.dgp, 150, 17);
  const Sample back = ingest_csv(dir_ / "sample.csv");
  EXPECT_EQ(direct.x, back.x);
  EXPECT_EQ(direct.y, back.y);
}

TEST_F(CliTest, SeedPrecedence)
{
  const auto cfg = write("c.json", small_config);
  const auto parsed = parse_config(json::parse(small_config));
  ::setenv("CONDU_SEED", "23", 1);
  ASSERT_EQ(run_cmd({ .command = "simulate", .config_path = cfg, .out_dir = dir_ }), exit_code::ok);
  EXPECT_EQ(ingest_csv(dir_ / "sample.csv").x, simulate(parsed.dgp, 150, 23).x);
  ASSERT_EQ(run_cmd({ .command = "simulate", .config_path = cfg, .out_dir = dir_, .seed = 5 }), exit_code::ok);
  EXPECT_EQ(ingest_csv(dir_ / "sample.csv").x, simulate(parsed.dgp, 150, 5).x);
  EXPECT_EQ(json::parse(slurp(dir_ / "config_echo.json"))["experiment"]["seed"], 5);
  ::setenv("CONDU_SEED", "abc", 1);
  EXPECT_EQ(run_cmd({ .command = "simulate", .config_path = cfg, .out_dir = dir_ }), exit_code::validation);
  ::unsetenv("CONDU_SEED");
}

TEST_F(CliTest, RatesIsByteStableAcrossThreadCounts)
{
  const auto cfg = write("c.json", small_config);
  const auto a = dir_ / "a", b = dir_ / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  ASSERT_EQ(run_cmd({ .command = "rates", .config_path = cfg, .out_dir = a, .threads = 1 }), exit_code::ok) << err_.str();
  ASSERT_EQ(run_cmd({ .command = "rates", .config_path = cfg, .out_dir = b, .threads = 4 }), exit_code::ok);
  for (const char* f : { "deviations.csv", "report.json", "config_echo.json" })
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto report = json::parse(slurp(a / "report.json"));
  EXPECT_EQ(report["per_n"].size(), 2u);
}

TEST_F(CliTest, SweepUsesOneSampleSize)
{
  const auto cfg = write("c.json", small_config);
  ASSERT_EQ(run_cmd({ .command = "sweep", .config_path = cfg, .out_dir = dir_ }), exit_code::ok) << err_.str();
  const auto report = json::parse(slurp(dir_ / "report.json"));
  ASSERT_EQ(report["per_n"].size(), 1u);
  EXPECT_EQ(report["per_n"][0]["n"], 150);
}

TEST_F(CliTest, RuntimeFailureExitsTwo)
{
  auto doc = json::parse(small_config);
  doc["regime"]["c"] = 10.0; // lower bandwidth above the cap
  const auto cfg = write("c.json", doc.dump());
  EXPECT_EQ(run_cmd({ .command = "rates", .config_path = cfg, .out_dir = dir_ }), exit_code::runtime);
  EXPECT_EQ(json::parse(err_.str()).at("error"), "EmptyBandwidthRange");
}

TEST_F(CliTest, KernelTableRelativeToConfig)
{
  write("tri.csv", "u,k\n-0.5,0\n0,2\n0.5,0\n");
  auto doc = json::parse(small_config);
  doc["kernel"] = { { "table", "tri.csv" } };
  const auto cfg = write("c.json", doc.dump());
  ASSERT_EQ(run_cmd({ .command = "estimate", .config_path = cfg, .out_dir = dir_ }), exit_code::ok) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "estimates.csv"));
}

TEST_F(CliTest, IngestReportsRowNumbers)
{
  const auto bad = write("bad.csv", "x,y\n0.1,0.2\n0.3,\n");
  try {
    ingest_csv(bad);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
  const auto inf = write("inf.csv", "x,y\n0.1,inf\n");
  EXPECT_THROW(ingest_csv(inf), SchemaError);
  EXPECT_THROW(ingest_csv(dir_ / "missing.csv"), IoError);
  const auto ok = write("ok.csv", "x,y\n0.1,0.2\n0.3,0.4\n0.5,0.6\n");
  EXPECT_EQ(ingest_csv(ok).size(), 3u);

  const auto cfg = write("c.json", small_config);
  EXPECT_EQ(run_cmd({ .command = "estimate", .config_path = cfg, .data_path = bad, .out_dir = dir_ }),
            exit_code::validation);
  EXPECT_EQ(json::parse(err_.str()).at("error"), "SchemaError");
}

TEST_F(CliTest, BinaryEndToEnd)
{
  const auto cfg = write("c.json", small_config);
  const std::string cmd = std::string(CONDU_CLI_PATH) + " simulate --config " + cfg.string() + " --out " +
                          dir_.string() + " --seed 3 > /dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "sample.csv"));
  const std::string bad = std::string(CONDU_CLI_PATH) + " simulate --out " + dir_.string() + " > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
