#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mss/report.hpp"
#include "mss/scenario.hpp"
#include "mss/swarm.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInvalidInput = 2;
constexpr int kRuntimeFailure = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("mss");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MSS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed,
            const std::string& mode_name, const fs::path& out_dir) {
  mss::Scenario scenario;
  mss::RunMode mode;
  try {
    scenario = mss::load_scenario(scenario_path);
    mode = mss::parse_mode(mode_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  try {
    const auto report = mss::run_scenario(scenario, seed.value_or(scenario.seed), mode);
    const auto metrics = mss::compute_metrics(report);
    fs::create_directories(out_dir);
    mss::json map = {{"frames", report.frames}, {"entries", mss::map_to_json(report.final_map)}};
    write_file(out_dir / "map.json", map.dump(2) + "\n");
    write_file(out_dir / "trajectories.csv", mss::trajectories_csv(report));
    write_file(out_dir / "report.json", mss::report_to_json(report, metrics).dump(2) + "\n");
    write_file(out_dir / "metrics.json", mss::metrics_to_json(metrics).dump(2) + "\n");
    std::cout << mss::metrics_to_json(metrics).dump() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: run failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

int cmd_plot(const std::string& report_path, const fs::path& out_dir) {
  mss::RunReport report;
  try {
    std::ifstream in(report_path);
    if (!in) throw std::runtime_error("cannot read " + report_path);
    report = mss::report_from_json(mss::json::parse(in));
  } catch (const std::exception& e) {
    std::cerr << "error: malformed report: " << e.what() << "\n";
    return kInvalidInput;
  }
  try {
    fs::create_directories(out_dir);
    write_file(out_dir / "map.svg", mss::render_svg(report));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Multi-drone marker mapping simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string mode = "lockstep";
  std::string run_out = "out";
  auto* run = app.add_subcommand("run", "Run a scenario and write map, trajectories, report and metrics");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "RNG seed (defaults to the scenario's seed)");
  run->add_option("--mode", mode, "lockstep or threaded")
      ->check(CLI::IsMember({"lockstep", "threaded"}));
  run->add_option("--out", run_out, "Output directory");

  std::string report_path;
  std::string plot_out = "out";
  auto* plot = app.add_subcommand("plot", "Render report.json as a top-down SVG (map.svg)");
  plot->add_option("report", report_path, "report.json from a run")->required();
  plot->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidInput;
  }

  if (*run) return cmd_run(scenario_path, seed, mode, run_out);
  return cmd_plot(report_path, plot_out);
}
