#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mss/ba.hpp"
#include "mss/ekf.hpp"
#include "mss/merge.hpp"
#include "mss/worldsim.hpp"

namespace mss {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyParams {
  int grid_x = 3;
  int grid_y = 3;
  double r_visit = 0.3;    // m
  double max_speed = 0.5;  // m/s
  double gain = 1.0;       // 1/s, velocity per meter of distance to target
  double yaw_rate = 0.3;   // rad/s, constant scan
};

struct DroneSpec {
  int id = 0;
  Pose6D start_pose;  // true pose in the world; also the origin of the drone's own frame
  std::vector<CameraParams> cameras;
  Bounds region;  // sweep region, world coordinates
  double altitude = 1.5;
};

struct BaSchedule {
  bool enabled = true;
  int every_keyposes = 10;
  BaConfig config;
};

struct ThreadedParams {
  int tick_period_us = 1000;
  std::string transport = "inproc";  // inproc | tcp
  std::uint16_t port = 0;            // 0 picks a free port
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  double duration = 0.0;    // s
  double tick_rate = 10.0;  // Hz
  World world;
  std::vector<DroneSpec> drones;
  SensorNoise sensor_noise;
  EkfParams filter;
  int n_fuse = 5;
  PolicyParams policy;
  KeyposeParams keypose;
  BaSchedule ba;
  RefineThresholds refine;
  ThreadedParams threaded;
  nlohmann::json source;  // parsed input, used for the digest

  double dt() const { return 1.0 / tick_rate; }
  int num_ticks() const;
};

/// Throws ScenarioError with a readable message on any schema or validation failure.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
void validate_scenario(const Scenario& s);

/// SHA-256 of the canonical dump of the scenario source.
std::string scenario_digest(const Scenario& s);

}  // namespace mss
