#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "fixtures.hpp"
#include "tollopt/report.hpp"

using namespace tollopt;
using tollopt::testing::TempDir;
using tollopt::testing::toy_config_path;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) v.push_back(l);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> fast_run(const fs::path& out) {
  return {"run", "--config", toy_config_path().string(), "--out", out.string(), "--quiet",
          "--set", "scenario.replications=2", "--set", "scenario.demand_levels=1.0",
          "--set", "scenario.scenarios=no_toll"};
}

void write_series(const fs::path& p, const std::vector<double>& means) {
  std::vector<SeriesRow> rows;
  for (std::size_t i = 0; i < means.size(); ++i)
    rows.push_back({300.0 * static_cast<double>(i), 300.0 * static_cast<double>(i + 1), "tolling", {20, means[i], 4.0}});
  std::ofstream f(p);
  write_series_csv(f, rows);
}

}  // namespace

TEST(Cli, RunWritesOutputs) {
  TempDir dir("cli_run");
  const auto r = invoke(fast_run(dir.path()));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const char* f : {"trips_no_toll_1_r0.csv", "trips_no_toll_1_r1.csv", "cycles_no_toll_1_r0.csv",
                        "trace_no_toll_1_r0.csv", "guidance_no_toll_1_r0.csv", "series_no_toll_1.csv", "report.csv"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  const auto series = load_series_csv(dir.path() / "series_no_toll_1.csv");
  EXPECT_EQ(series.size(), 24u);
  EXPECT_EQ(lines(slurp(dir.path() / "report.csv")).size(), 1u);  // header only without a treatment
  EXPECT_EQ(lines(slurp(dir.path() / "cycles_no_toll_1_r0.csv")).front(),
            "cycle,start,lambda,next_lambda,optimized,aborted,evaluations,converged,best_objective,wall_clock");
}

TEST(Cli, DeltaOverrideChangesSeriesResolution) {
  TempDir dir("cli_delta");
  auto args = fast_run(dir.path());
  args.insert(args.end(), {"--set", "time.delta=60", "--set", "scenario.replications=1"});
  const auto r = invoke(args);
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto series = load_series_csv(dir.path() / "series_no_toll_1.csv");
  ASSERT_EQ(series.size(), 120u);
  for (const auto& row : series) EXPECT_DOUBLE_EQ(row.end - row.start, 60.0);
}

TEST(Cli, MissingNetworkIsUsageError) {
  TempDir dir("cli_missing");
  auto args = fast_run(dir.path());
  args.insert(args.end(), {"--set", "files.network=no_such_network.txt"});
  const auto r = invoke(args);
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("no_such_network.txt"), std::string::npos) << r.err;
}

TEST(Cli, BadInvocations) {
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"run", "--config", toy_config_path().string()}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({"validate", "--config", toy_config_path().string(), "--set", "ga.population=7"}).code,
            cli::kExitUsage);
}

TEST(Cli, Validate) {
  const auto r = invoke({"validate", "--config", toy_config_path().string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto l = lines(r.out);
  EXPECT_EQ(l.back(), "ok");
  EXPECT_EQ(l[1], "links 5");
  EXPECT_EQ(l[2], "gantries 1");
  EXPECT_EQ(l[5], "intervals 24");
}

TEST(Cli, CompareSelfAndNinePercent) {
  TempDir dir("cli_compare");
  const auto a = dir.path() / "a.csv", b = dir.path() / "b.csv";
  write_series(a, {100.0, 110.0, 105.0, 95.0});
  write_series(b, {91.0, 100.1, 95.55, 86.45});

  const auto self = invoke({"compare", "--peak", "00:05-00:15", a.string(), a.string()});
  ASSERT_EQ(self.code, cli::kExitOk) << self.err;
  auto l = lines(self.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "window,baseline_count,baseline_mean,treatment_count,treatment_mean,improvement_pct,intervals,t,p,significant");
  EXPECT_TRUE(l[1].starts_with("tolling,80,102.5000,80,102.5000,0.0000,4,"));
  EXPECT_TRUE(l[1].ends_with(",0"));
  EXPECT_TRUE(l[2].starts_with("peak,40,107.5000,40,107.5000,0.0000,2,"));

  const auto out_file = dir.path() / "cmp.csv";
  const auto nine = invoke({"compare", "--peak", "00:05-00:15", a.string(), b.string(), "--out", out_file.string()});
  ASSERT_EQ(nine.code, cli::kExitOk) << nine.err;
  l = lines(slurp(out_file));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_NE(l[1].find(",9.0000,4,"), std::string::npos) << l[1];
  EXPECT_NE(l[2].find(",9.0000,2,"), std::string::npos) << l[2];
}

TEST(Cli, CompareFailures) {
  TempDir dir("cli_compare_bad");
  const auto a = dir.path() / "a.csv", b = dir.path() / "b.csv";
  write_series(a, {100.0, 110.0, 105.0});
  write_series(b, {100.0, 110.0});
  EXPECT_NE(invoke({"compare", "--peak", "00:05-00:10", a.string(), b.string()}).code, cli::kExitOk);
  EXPECT_EQ(invoke({"compare", "--peak", "00:05-00:10", a.string(), (dir.path() / "none.csv").string()}).code,
            cli::kExitUsage);
}

TEST(Cli, GridOracleSingleGantry) {
  const auto r = invoke({"grid-oracle", "--config", toy_config_path().string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 6u);
  EXPECT_EQ(l[0], "row,toll_2,objective,argmin");
  double best = 0.0, min_seen = 1e300;
  int argmins = 0;
  for (std::size_t k = 1; k < l.size(); ++k) {
    std::istringstream in(l[k]);
    std::string row, toll, obj, flag;
    std::getline(in, row, ',');
    std::getline(in, toll, ',');
    std::getline(in, obj, ',');
    std::getline(in, flag, ',');
    EXPECT_DOUBLE_EQ(std::stod(toll), 2.5 * static_cast<double>(k - 1));
    min_seen = std::min(min_seen, std::stod(obj));
    if (flag == "1") {
      ++argmins;
      best = std::stod(obj);
    }
  }
  EXPECT_EQ(argmins, 1);
  EXPECT_EQ(best, min_seen);
}

TEST(Cli, GridOracleTwoGantries) {
  TempDir dir("cli_grid2");
  const fs::path toy = toy_config_path().parent_path();
  std::string net = slurp(toy / "network.txt");
  net += "4\n";
  {
    std::ofstream f(dir.path() / "network.txt");
    f << net;
  }
  const auto r = invoke({"grid-oracle", "--config", toy_config_path().string(), "--levels", "3", "--set",
                         "files.network=" + (dir.path() / "network.txt").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 10u);
  EXPECT_EQ(l[0], "row,toll_2,toll_4,objective,argmin");
  const auto too_big = invoke({"grid-oracle", "--config", toy_config_path().string(), "--levels", "2000000",
                               "--set", "files.network=" + (dir.path() / "network.txt").string()});
  EXPECT_EQ(too_big.code, cli::kExitUsage);
}
