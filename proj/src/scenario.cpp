#include "mss/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/sha.h>

#include "mss/json_io.hpp"

namespace mss {

int Scenario::num_ticks() const { return static_cast<int>(std::llround(duration * tick_rate)); }

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

DroneSpec parse_drone(const json& j, const Bounds& world_bounds) {
  DroneSpec d;
  d.id = j.at("id").get<int>();
  d.start_pose = j.at("start_pose").get<Pose6D>();
  if (j.contains("cameras")) {
    d.cameras = j.at("cameras").get<std::vector<CameraParams>>();
  } else {
    d.cameras = {forward_camera(), downward_camera()};
  }
  d.region = j.contains("region") ? j.at("region").get<Bounds>() : world_bounds;
  d.altitude = get_or(j, "altitude", d.start_pose.translation().z());
  return d;
}

}  // namespace

Scenario parse_scenario(const json& j) {
  Scenario s;
  try {
    s.source = j;
    s.name = get_or<std::string>(j, "name", "unnamed");
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    s.duration = j.at("duration").get<double>();
    s.tick_rate = get_or(j, "tick_rate", 10.0);

    const json& w = j.at("world");
    s.world.bounds = w.at("bounds").get<Bounds>();
    for (const auto& m : w.at("markers")) {
      s.world.markers.push_back({m.at("id").get<int>(), m.at("pose").get<Pose6D>()});
    }
    for (const auto& d : j.at("drones")) s.drones.push_back(parse_drone(d, s.world.bounds));

    if (j.contains("sensor_noise")) {
      const json& n = j.at("sensor_noise");
      if (n.contains("detection")) s.sensor_noise.detection = n.at("detection");
      if (n.contains("odometry")) {
        s.sensor_noise.sigma_v = get_or(n.at("odometry"), "sigma_v", s.sensor_noise.sigma_v);
        s.sensor_noise.sigma_omega =
            get_or(n.at("odometry"), "sigma_omega", s.sensor_noise.sigma_omega);
      }
      s.sensor_noise.dropout = get_or(n, "dropout", s.sensor_noise.dropout);
    }

    const double dt = 1.0 / s.tick_rate;
    const double qv = s.sensor_noise.sigma_v * s.sensor_noise.sigma_v * dt;
    const double qw = s.sensor_noise.sigma_omega * s.sensor_noise.sigma_omega * dt;
    s.filter.process_noise << qv, qv, qv, qw, qw, qw;
    if (j.contains("filter")) {
      const json& f = j.at("filter");
      if (f.contains("detection_model")) s.filter.detection = f.at("detection_model");
      if (f.contains("process_noise")) s.filter.process_noise = vec_from_json(f.at("process_noise"), 6);
      s.filter.gating = get_or(f, "gating", s.filter.gating);
      s.n_fuse = get_or(f, "n_fuse", s.n_fuse);
    }
    if (j.contains("policy")) {
      const json& p = j.at("policy");
      if (p.contains("grid")) {
        s.policy.grid_x = p.at("grid").at(0).get<int>();
        s.policy.grid_y = p.at("grid").at(1).get<int>();
      }
      s.policy.r_visit = get_or(p, "r_visit", s.policy.r_visit);
      s.policy.max_speed = get_or(p, "max_speed", s.policy.max_speed);
      s.policy.gain = get_or(p, "gain", s.policy.gain);
      s.policy.yaw_rate = get_or(p, "yaw_rate", s.policy.yaw_rate);
    }
    if (j.contains("keypose")) {
      s.keypose.d_key = get_or(j.at("keypose"), "d_key", s.keypose.d_key);
      s.keypose.theta_key = get_or(j.at("keypose"), "theta_key", s.keypose.theta_key);
    }
    if (j.contains("ba")) {
      const json& b = j.at("ba");
      s.ba.enabled = get_or(b, "enabled", s.ba.enabled);
      s.ba.every_keyposes = get_or(b, "every_keyposes", s.ba.every_keyposes);
      s.ba.config.max_iterations = get_or(b, "max_iterations", s.ba.config.max_iterations);
    }
    if (j.contains("refine")) {
      s.refine.position = get_or(j.at("refine"), "position", s.refine.position);
      s.refine.angle = get_or(j.at("refine"), "angle", s.refine.angle);
    }
    if (j.contains("threaded")) {
      const json& t = j.at("threaded");
      s.threaded.tick_period_us = get_or(t, "tick_period_us", s.threaded.tick_period_us);
      s.threaded.transport = get_or<std::string>(t, "transport", s.threaded.transport);
      s.threaded.port = get_or<std::uint16_t>(t, "port", s.threaded.port);
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("invalid scenario: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ScenarioError("scenario file is not valid JSON: " + path.string());
  return parse_scenario(j);
}

void validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& msg) { throw ScenarioError("invalid scenario: " + msg); };
  if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) fail("duration must be >= 0");
  if (!(s.tick_rate >= 2.0) || !std::isfinite(s.tick_rate)) fail("tick_rate must be >= 2 Hz");
  try {
    s.world.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (s.drones.empty()) fail("at least one drone is required");
  std::set<int> ids;
  for (const auto& d : s.drones) {
    if (d.id < 0) fail("drone ids must be non-negative");
    if (!ids.insert(d.id).second) fail("duplicate drone id " + std::to_string(d.id));
    if (!s.world.bounds.contains(d.start_pose.translation())) {
      fail("drone " + std::to_string(d.id) + " starts outside the world bounds");
    }
    const Vec3 e = d.start_pose.euler();
    if (std::abs(e.x()) > 1e-9 || std::abs(e.y()) > 1e-9) {
      fail("drone " + std::to_string(d.id) + " must start level (roll = pitch = 0)");
    }
    if (d.cameras.empty()) fail("drone " + std::to_string(d.id) + " has no camera");
    for (const auto& c : d.cameras) {
      if (!(c.fov_half_angle > 0.0 && c.fov_half_angle < std::numbers::pi / 2)) {
        fail("camera fov_half_angle must be in (0, pi/2)");
      }
      if (!(c.max_range > 0.0)) fail("camera max_range must be positive");
    }
  }
  const auto& n = s.sensor_noise;
  if (n.detection.a_pos < 0 || n.detection.b_pos < 0 || n.detection.a_ang < 0 ||
      n.detection.b_ang < 0 || n.sigma_v < 0 || n.sigma_omega < 0) {
    fail("noise parameters must be non-negative");
  }
  if (n.dropout < 0.0 || n.dropout >= 1.0) fail("dropout must be in [0, 1)");
  const auto& m = s.filter.detection;
  if (!(m.a_pos > 0 && m.a_ang > 0 && m.b_pos >= 0 && m.b_ang >= 0)) {
    fail("filter detection model needs positive intercepts");
  }
  if ((s.filter.process_noise.array() < 0.0).any()) fail("process noise must be non-negative");
  if (s.n_fuse < 1) fail("n_fuse must be >= 1");
  if (s.policy.grid_x < 1 || s.policy.grid_y < 1) fail("policy grid must be at least 1x1");
  if (!(s.policy.max_speed > 0.0)) fail("policy max_speed must be positive");
  if (s.ba.every_keyposes < 1) fail("ba.every_keyposes must be >= 1");
  if (s.threaded.transport != "inproc" && s.threaded.transport != "tcp") {
    fail("threaded.transport must be inproc or tcp");
  }
}

std::string scenario_digest(const Scenario& s) {
  const std::string text = s.source.dump();
  unsigned char hash[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), hash);
  std::ostringstream out;
  out << std::hex;
  for (unsigned char c : hash) out << (c < 16 ? "0" : "") << static_cast<int>(c);
  return out.str();
}

}  // namespace mss
