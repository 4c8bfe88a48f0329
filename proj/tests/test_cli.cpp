#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "lpffd/image.hpp"
#include "lpffd/io.hpp"
#include "oracles.hpp"

using namespace lpffd;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(LPFFD_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(LPFFD_DATA_DIR) + "/" + name; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("lpffd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

json last_json_line(const std::string& text) {
  std::string line, last;
  std::istringstream in(text);
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return json::parse(last);
}

}  // namespace

TEST_F(Cli, MissingSceneExitsWithNotFound) {
  const CliRun r = run("solve --scene /nonexistent/x.json --out " + path("o"));
  EXPECT_EQ(r.status, 2);
  const json j = last_json_line(r.out);
  EXPECT_EQ(j["error"], "scene not found");
  EXPECT_EQ(j["code"], "not_found");
  EXPECT_EQ(j["path"], "/nonexistent/x.json");
}

TEST_F(Cli, BadArgumentsExitNonzero) {
  EXPECT_NE(run("solve --scene " + data("gingerman.json") + " --dims 10 --out " + path("o")).status, 0);
  EXPECT_NE(run("solve --scene " + data("gingerman.json") + " --solver magic --out " + path("o")).status, 0);
  EXPECT_NE(run("nonsense").status, 0);
}

TEST_F(Cli, RestScenarioWritesOutputsAndPassesCheck) {
  const CliRun r = run("solve --scenario " + data("rest.json") + " --out " + path("o"));
  ASSERT_EQ(r.status, 0) << r.out;
  for (const char* f : {"grid.json", "scene.json", "report.json", "energy.csv", "check.json"})
    EXPECT_TRUE(fs::exists(path("o") + "/" + f)) << f;
  const LatticeGrid grid = load_grid(path("o/grid.json"));
  EXPECT_LT(oracle::max_abs(grid.current() - grid.rest()), 1e-6 * grid.box().extent.maxCoeff());
  const json report = read_json_file(path("o/report.json"), "report");
  EXPECT_LT(report["angular"].get<double>(), 1e-9);
  EXPECT_EQ(read_json_file(path("o/check.json"), "check")["passed"], true);
}

TEST_F(Cli, StretchSolveIsStationaryAndMonotone) {
  const CliRun r = run("solve --scenario " + data("arm_stretch.json") + " --out " + path("o"));
  ASSERT_EQ(r.status, 0) << r.out;
  const json summary = last_json_line(r.out);
  EXPECT_EQ(summary["status"], "ok");
  EXPECT_EQ(summary["stationary"], true);
  std::ifstream csv(path("o/energy.csv"));
  std::string line;
  std::getline(csv, line);
  double prev = std::numeric_limits<double>::infinity();
  int rows = 0;
  while (std::getline(csv, line)) {
    const double total = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_LE(total, prev * (1 + 1e-9));
    prev = total;
    ++rows;
  }
  EXPECT_GE(rows, 2);
}

TEST_F(Cli, TransferOfRestGridIsIdentity) {
  ASSERT_EQ(run("solve --scenario " + data("rest.json") + " --out " + path("o")).status, 0);
  const CliRun r = run("transfer --grid " + path("o/grid.json") + " --scene " + data("gingerman.json") + " --out " +
                    path("moved.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  const TriMesh rest = load_scene(data("gingerman.json"));
  const TriMesh moved = load_scene(path("moved.json"));
  EXPECT_LT(oracle::max_abs(moved.vertices() - rest.vertices()), 1e-6 * model_scale(rest.vertices()));
}

TEST_F(Cli, MetricsOfSolvedScene) {
  ASSERT_EQ(run("solve --scenario " + data("arm_stretch.json") + " --out " + path("o")).status, 0);
  const CliRun r = run("metrics --scene " + data("gingerman.json") + " --in " + path("o/scene.json") + " --out " +
                    path("m.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  const json a = read_json_file(path("m.json"), "metrics");
  const json b = read_json_file(path("o/report.json"), "report");
  EXPECT_DOUBLE_EQ(a["angular"].get<double>(), b["angular"].get<double>());
  EXPECT_GT(a["angular"].get<double>(), 0.0);
}

TEST_F(Cli, WarpWithRestGridKeepsImage) {
  const Image flag = read_ppm(data("flag.ppm"));
  const LatticeGrid grid({4, 4}, Box{Eigen::Vector2d::Zero(), Eigen::Vector2d(1.0, 1.0)});
  write_json_file(path("grid.json"), grid_to_json(grid));
  const CliRun r = run("warp --grid " + path("grid.json") + " --in " + data("flag.ppm") + " --out " + path("w.ppm"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(read_ppm(path("w.ppm")).data, flag.data);
}

TEST_F(Cli, BenchWritesCsv) {
  const CliRun r = run("bench --scene " + data("bird.json") + " --dims 4x4 --repeats 1 --out " + path("b.csv"));
  ASSERT_EQ(r.status, 0) << r.out;
  std::ifstream in(path("b.csv"));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header.substr(0, 5), "scene");
  EXPECT_NE(row.find("4x4"), std::string::npos);
}

TEST_F(Cli, StdioServiceAnswersEachLine) {
  {
    std::ofstream in(path("in.ndjson"));
    in << R"({"type":"createSession","payload":{"id":"x","scenePath":")" << data("bird.json") << R"("}})" << '\n';
    in << R"({"type":"getState","session":"x"})" << '\n';
    in << R"({"type":"getState","session":"y"})" << '\n';
  }
  const CliRun r = run("serve --stdio < " + path("in.ndjson"));
  ASSERT_EQ(r.status, 0);
  std::istringstream lines(r.out);
  std::vector<json> out;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) out.push_back(json::parse(line));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0]["type"], "stateSnapshot");
  EXPECT_EQ(out[1]["revision"], 0);
  EXPECT_EQ(out[2]["payload"]["code"], "unknown_session");
}
