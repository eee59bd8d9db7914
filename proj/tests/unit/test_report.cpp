#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "mss/report.hpp"
#include "mss/swarm.hpp"
#include "oracles.hpp"

using namespace mss;
namespace fs = std::filesystem;

namespace {

RunReport synthetic_report() {
  RunReport r;
  r.scenario_name = "synthetic";
  r.scenario_digest = std::string(64, 'a');
  r.seed = 4;
  r.mode = "lockstep";
  r.tick_rate = 10;
  r.ticks = 3;
  r.drone_ids = {0, 1};
  r.frames = {FrameId{0}};
  const std::vector<Vec3> at = {{0, 0, 0}, {2, 0, 0}, {0, 3, 0}, {2, 2, 0.5}};
  for (int i = 0; i < 4; ++i) {
    const Pose6D p = Pose6D::from_euler(at[i], Vec3(0, 0, 0.3 * i));
    r.truth_markers.push_back({i, p});
    r.final_map.push_back({i, FrameId{0}, p, Covariance6::Identity() * 1e-4, 5, 1.0});
  }
  for (int k = 1; k <= 3; ++k) {
    for (int d : r.drone_ids) {
      const Pose6D p = Pose6D::from_euler(Vec3(0.1 * k, d, 1.5), Vec3(0, 0, 0.1 * k));
      r.trajectories.push_back({k, 0.1 * k, d, FrameId{0}, p, p});
    }
  }
  return r;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Metrics, PerfectEstimateHasZeroError) {
  const Metrics m = compute_metrics(synthetic_report());
  ASSERT_TRUE(m.marker_position_rmse);
  EXPECT_NEAR(*m.marker_position_rmse, 0.0, 1e-12);
  EXPECT_NEAR(*m.marker_orientation_rmse, 0.0, 1e-7);
  EXPECT_NEAR(*m.ate.at(0), 0.0, 1e-12);
  EXPECT_NEAR(*m.ate.at(1), 0.0, 1e-12);
  EXPECT_EQ(m.marker_count, 4);
  EXPECT_EQ(m.frame_count, 1);
}

TEST(Metrics, UniformOffsetWithoutAlignment) {
  RunReport r = synthetic_report();
  for (auto& e : r.final_map) e.pose = Pose6D(e.pose.translation() + Vec3(0.05, 0, 0), e.pose.rotation());
  const Metrics raw = compute_metrics(r, false);
  EXPECT_NEAR(*raw.marker_position_rmse, 0.05, 1e-12);
  EXPECT_FALSE(raw.aligned);
  const Metrics aligned = compute_metrics(r, true);
  EXPECT_NEAR(*aligned.marker_position_rmse, 0.0, 1e-9);
}

TEST(Metrics, SingleDisplacedMarkerOfFour) {
  RunReport r = synthetic_report();
  r.final_map[1].pose = Pose6D(r.final_map[1].pose.translation() + Vec3(0, 0.1, 0),
                               r.final_map[1].pose.rotation());
  EXPECT_NEAR(*compute_metrics(r, false).marker_position_rmse, std::sqrt(0.1 * 0.1 / 4), 1e-12);
}

TEST(Metrics, OrientationErrorMatchesHandComputation) {
  RunReport r = synthetic_report();
  r.final_map[2].pose = r.final_map[2].pose * Pose6D::from_euler(Vec3::Zero(), Vec3(0, 0, 0.2));
  const Metrics m = compute_metrics(r, false);
  EXPECT_NEAR(*m.marker_orientation_rmse, std::sqrt(0.04 / 4), 1e-12);
  EXPECT_NEAR(*m.marker_position_rmse, 0.0, 1e-12);
}

TEST(Metrics, InvariantToFrameRepresentation) {
  RunReport r = synthetic_report();
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.03);
  for (auto& e : r.final_map) {
    e.pose = Pose6D(e.pose.translation() + Vec3(noise(rng), noise(rng), noise(rng)),
                    e.pose.rotation());
  }
  const double base = *compute_metrics(r).marker_position_rmse;
  EXPECT_GT(base, 1e-3);
  oracle::RandomPoses gen(rng());
  for (int i = 0; i < 20; ++i) {
    const Pose6D t = gen.pose();
    RunReport moved = r;
    for (auto& e : moved.final_map) e.pose = t * e.pose;
    for (auto& s : moved.trajectories) s.estimate = t * s.estimate;
    const Metrics m = compute_metrics(moved);
    EXPECT_NEAR(*m.marker_position_rmse, base, 1e-9);
    EXPECT_NEAR(*m.ate.at(0), *compute_metrics(r).ate.at(0), 1e-9);
  }
}

TEST(Metrics, AteFollowsMergeChain) {
  RunReport r = synthetic_report();
  const Pose6D rt = Pose6D::from_euler(Vec3(4, 1, 0), Vec3(0, 0, 1.1));
  for (auto& s : r.trajectories) {
    if (s.drone_id == 1) {
      s.frame = FrameId{1};
      s.estimate = rt.inverse() * s.estimate;
    }
  }
  MergeEvent ev;
  ev.transform.from = FrameId{1};
  ev.transform.to = FrameId{0};
  ev.transform.rt = rt;
  ev.matched_ids = {0, 1};
  r.merges.push_back(ev);
  const Metrics m = compute_metrics(r);
  EXPECT_NEAR(*m.ate.at(1), 0.0, 1e-9);
  EXPECT_EQ(m.merge_count, 1);
}

TEST(Metrics, EmptyReport) {
  RunReport r;
  r.drone_ids = {3};
  const Metrics m = compute_metrics(r);
  EXPECT_FALSE(m.marker_position_rmse);
  EXPECT_FALSE(m.ate.at(3));
  const json j = metrics_to_json(m);
  EXPECT_TRUE(j["marker_position_rmse"].is_null());
  EXPECT_TRUE(j["ate"]["3"].is_null());
}

TEST(Outputs, CsvLayout) {
  const RunReport r = synthetic_report();
  const std::string csv = trajectories_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "tick,sim_time,drone_id,source,x,y,z,alpha,beta,gamma");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
  }
  EXPECT_EQ(rows, 2 * static_cast<int>(r.trajectories.size()));
  EXPECT_NE(csv.find("1,0.10000000000000001,0,truth,"), std::string::npos);
}

TEST(Outputs, SvgElements) {
  RunReport r = synthetic_report();
  MergeEvent ev;
  ev.transform.from = FrameId{1};
  ev.transform.to = FrameId{0};
  ev.matched_ids = {1, 3};
  r.merges.push_back(ev);
  const std::string svg = render_svg(r);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(count(svg, "class=\"marker-truth\""), 4u);
  EXPECT_EQ(count(svg, "class=\"marker-est\""), 4u);
  EXPECT_EQ(count(svg, "class=\"traj-truth\""), 2u);
  EXPECT_EQ(count(svg, "class=\"traj-est\""), 2u);
  EXPECT_EQ(count(svg, "class=\"merge-event\""), 1u);
  EXPECT_EQ(count(svg, "class=\"axes\""), 1u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Outputs, SvgOfEmptyReport) {
  const std::string svg = render_svg(RunReport{});
  EXPECT_EQ(count(svg, "class=\"marker-est\""), 0u);
  EXPECT_EQ(count(svg, "<polyline"), 0u);
  EXPECT_NE(svg.find("n/a"), std::string::npos);
}

TEST(Outputs, ReportJsonRoundTrip) {
  RunReport r = synthetic_report();
  MergeEvent ev;
  ev.time = 2.5;
  ev.transform.from = FrameId{1};
  ev.transform.to = FrameId{0};
  ev.transform.rt = Pose6D::from_euler(Vec3(1, 2, 3), Vec3(0.1, -0.2, 0.3));
  ev.transform.support = 3;
  ev.matched_ids = {1, 2, 3};
  ev.reassigned_drones = {1};
  ev.moved_markers = {7};
  r.merges.push_back(ev);
  r.refinements.push_back({3.0, FrameId{0}, FrameId{1}, Pose6D(), 0.2, 0.1, 4, {7}});
  BaEvent ba;
  ba.trigger = "merge";
  ba.report.iterations = 3;
  ba.report.cost_trace = {2.0, 1.0};
  r.ba_runs.push_back(ba);
  const json j = report_to_json(r, compute_metrics(r));
  const RunReport back = report_from_json(json::parse(j.dump()));
  EXPECT_TRUE(oracle::json_near(report_to_json(back, compute_metrics(back)), j));
  EXPECT_THROW(report_from_json(json::object()), std::exception);
}

namespace {

struct CliRun {
  int code;
  fs::path dir;
};

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mss_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kCli = MSS_CLI_PATH;
const std::string kScenario = MSS_SOURCE_DIR "/scenarios/two_drone_demo.json";

}  // namespace

TEST(Cli, RunAndPlot) {
  const fs::path d = scratch("run");
  ASSERT_EQ(shell(kCli + " run " + kScenario + " --out " + d.string()), 0);
  for (const char* f : {"map.json", "trajectories.csv", "report.json", "metrics.json"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  ASSERT_EQ(shell(kCli + " plot " + (d / "report.json").string() + " --out " + d.string()), 0);
  EXPECT_TRUE(fs::exists(d / "map.svg"));
  const std::string svg = slurp(d / "map.svg");
  EXPECT_EQ(count(svg, "<polyline"), 4u);
  const json map = json::parse(slurp(d / "map.json"));
  EXPECT_EQ(count(svg, "class=\"marker-est\""), map["entries"].size());
  const json metrics = json::parse(slurp(d / "metrics.json"));
  EXPECT_EQ(metrics["frame_count"], 1);
  fs::remove_all(d);
}

TEST(Cli, SeedControlsOutput) {
  const fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
  ASSERT_EQ(shell(kCli + " run " + kScenario + " --seed 21 --out " + a.string()), 0);
  ASSERT_EQ(shell(kCli + " run " + kScenario + " --seed 21 --out " + b.string()), 0);
  ASSERT_EQ(shell(kCli + " run " + kScenario + " --seed 22 --out " + c.string()), 0);
  EXPECT_EQ(slurp(a / "trajectories.csv"), slurp(b / "trajectories.csv"));
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_NE(slurp(a / "trajectories.csv"), slurp(c / "trajectories.csv"));
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("codes");
  EXPECT_EQ(shell(kCli), 2);
  EXPECT_EQ(shell(kCli + " run " + (d / "missing.json").string()), 2);
  EXPECT_EQ(shell(kCli + " run " + kScenario + " --mode sometimes"), 2);
  {
    std::ofstream(d / "bad.json") << "{\"duration\": 5}";
  }
  EXPECT_EQ(shell(kCli + " run " + (d / "bad.json").string() + " --out " + d.string()), 2);
  {
    std::ofstream(d / "report.json") << "[1, 2";
  }
  EXPECT_EQ(shell(kCli + " plot " + (d / "report.json").string() + " --out " + d.string()), 2);
  EXPECT_EQ(shell(kCli + " --help"), 0);
  fs::remove_all(d);
}
