#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "rmfs/experiments.hpp"
#include "rmfs/harness.hpp"

using namespace rmfs;
using namespace rmfs::harness;

namespace {

const std::filesystem::path kConfigs = RMFS_CONFIG_DIR;

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("rmfs_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rmfs");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

engine::SimulationOptions opts(std::uint64_t seed, double horizon) {
  engine::SimulationOptions o;
  o.seed = seed;
  o.horizon = horizon;
  o.assert_invariants = true;
  return o;
}

}  // namespace

TEST(Harness, DigestIsStable) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Harness, WritesAllOutputs) {
  const auto dir = fresh_dir("outputs");
  auto in = load_inputs(kConfigs / "default_layout.json", kConfigs / "default_scenario.json",
                        kConfigs / "default_controllers.json", 3);
  const auto f = run(std::move(in), opts(3, 1800.0), dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "footprint.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "timeseries.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "heatmap_floor0.csv"));
  const auto j = nlohmann::json::parse(slurp(dir / "footprint.json"));
  EXPECT_EQ(j["run_id"], f.run_id);
  EXPECT_EQ(j["pick_orders_completed"], f.pick_orders_completed);
  EXPECT_EQ(j["config_digests"].size(), 3u);
  EXPECT_GT(f.pick_orders_completed, 0);
}

TEST(Harness, TimeseriesBucketsSumToFootprint) {
  const auto dir = fresh_dir("buckets");
  auto in = load_inputs(kConfigs / "default_layout.json", {}, {}, 4);
  in.scenario.bucket = 600.0;
  const auto f = run(std::move(in), opts(4, 3600.0), dir);
  std::istringstream csv(slurp(dir / "timeseries.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "bucket_start_s,orders_picked,distance_m,orders_stored,pile_on");
  long picked = 0, stored = 0;
  double distance = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string cell[5];
    for (auto& c : cell) std::getline(row, c, ',');
    picked += std::stol(cell[1]);
    distance += std::stod(cell[2]);
    stored += std::stol(cell[3]);
    ++rows;
  }
  EXPECT_EQ(rows, 6);  // 600 s buckets
  EXPECT_EQ(picked, f.pick_orders_completed);
  EXPECT_EQ(stored, f.replenishment_orders_stored);
  EXPECT_NEAR(distance, f.distance, 1e-3);
}

void expect_identical_reruns(const std::string& tag, const std::filesystem::path& controllers,
                             const engine::SimulationOptions& o) {
  const auto a = fresh_dir(tag + "_a"), b = fresh_dir(tag + "_b");
  for (const auto& d : {a, b}) {
    auto in = load_inputs(kConfigs / "default_layout.json", kConfigs / "poisson_scenario.json", controllers, 9);
    run(std::move(in), o, d);
  }
  for (const char* f : {"footprint.json", "timeseries.csv", "heatmap_floor0.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Harness, RerunsAreByteIdentical) {
  expect_identical_reruns("rerun", kConfigs / "default_controllers.json", opts(9, 3600.0));
}

TEST(Harness, BufferedRerunsAreByteIdenticalWithStubbedClock) {
  auto o = opts(9, 3600.0);
  o.wall_clock = [] { return 0.0; };
  expect_identical_reruns("rerun_buffered", kConfigs / "switching_controllers.json", o);
}

TEST(Harness, RunIdDependsOnSeedAndConfig) {
  auto a = load_inputs(kConfigs / "default_layout.json", {}, {}, 1);
  auto b = load_inputs(kConfigs / "default_layout.json", {}, {}, 1);
  EXPECT_EQ(a.digests, b.digests);
  const auto fa = run(a, opts(1, 60.0));
  const auto fb = run(b, opts(2, 60.0));
  EXPECT_NE(fa.run_id, fb.run_id);
  b.scenario.bucket = 30.0;
  compute_digests(b);
  EXPECT_NE(a.digests.at("scenario"), b.digests.at("scenario"));
}

TEST(Harness, ZeroHorizonWritesEmptyOutputs) {
  const auto dir = fresh_dir("empty");
  auto in = load_inputs(kConfigs / "default_layout.json", {}, {}, 1);
  const auto f = run(std::move(in), opts(1, 0.0), dir);
  EXPECT_EQ(f.pick_orders_completed, 0);
  EXPECT_DOUBLE_EQ(f.distance, 0.0);
  EXPECT_EQ(slurp(dir / "timeseries.csv"), "bucket_start_s,orders_picked,distance_m,orders_stored,pile_on\n");
}

TEST(Harness, MissingLayoutIsAConfigError) {
  testing::internal::CaptureStderr();
  const int rc = cli({"--layout", "/nonexistent/layout.json"});
  const auto err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(rc, 2);
  EXPECT_NE(err.find("/nonexistent/layout.json"), std::string::npos);
}

TEST(Harness, ValidateOnlyWritesNothing) {
  const auto dir = fresh_dir("validate");
  testing::internal::CaptureStdout();
  const int rc = cli({"--layout", (kConfigs / "demonstrator_layout.json").string(), "--out", dir.string(),
                      "--validate-only"});
  testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_TRUE(std::filesystem::is_empty(dir));
}

TEST(Harness, BadControllerConfigIsAConfigError) {
  const auto dir = fresh_dir("badctl");
  auto j = nlohmann::json::parse(slurp(kConfigs / "switching_controllers.json"));
  j["sa"]["schedule"] = nlohmann::json::array({{{"time_s", 10.0}, {"station", 42}, {"active", false}}});
  write_file(dir / "ctl.json", j.dump());
  write_file(dir / "broken.json", "{ not json");
  testing::internal::CaptureStderr();
  const int bad_station = cli({"--layout", (kConfigs / "default_layout.json").string(), "--controllers",
                               (dir / "ctl.json").string(), "--validate-only"});
  const int broken = cli({"--layout", (kConfigs / "default_layout.json").string(), "--scenario",
                          (dir / "broken.json").string(), "--validate-only"});
  const auto err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(bad_station, 2);
  EXPECT_EQ(broken, 2);
  EXPECT_NE(err.find("broken.json"), std::string::npos);
}

TEST(Harness, CliRunWritesOutputs) {
  const auto dir = fresh_dir("cli");
  testing::internal::CaptureStdout();
  const int rc = cli({"--layout", (kConfigs / "demonstrator_layout.json").string(), "--horizon-s", "600", "--seed",
                      "5", "--out", dir.string(), "--assert-invariants"});
  const auto out = testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_NE(out.find("pick orders"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "footprint.json"));
}

TEST(Harness, ExperimentsAreListed) {
  const auto names = experiments::experiment_names();
  EXPECT_FALSE(names.empty());
  testing::internal::CaptureStdout();
  EXPECT_EQ(cli({"experiments", "list"}), 0);
  const auto out = testing::internal::GetCapturedStdout();
  for (const auto& n : names) EXPECT_NE(out.find(n), std::string::npos) << n;
}
