#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mss/geom.hpp"

namespace mss {

inline constexpr int kMaxMarkerId = 1023;

struct Bounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const;
  Vec3 clamp(const Vec3& p) const;
};

struct MarkerTruth {
  int id = 0;
  Pose6D pose;
};

/// Ground truth: marker poses in the single true global frame.
struct World {
  std::vector<MarkerTruth> markers;
  Bounds bounds;

  /// Throws std::invalid_argument on duplicate/out-of-range ids or markers outside bounds.
  void validate() const;
  const MarkerTruth* find(int marker_id) const;
};

/// Pose-level camera: optical axis is +z of the camera frame, x right, y down.
struct CameraParams {
  std::string name;
  Pose6D extrinsics;  // camera pose in the body frame
  double fov_half_angle = 0.6;
  double max_range = 4.0;
};

CameraParams forward_camera(double fov_half_angle = 0.6, double max_range = 4.0);
CameraParams downward_camera(double fov_half_angle = 0.7, double max_range = 3.0);

/// Range-dependent per-axis standard deviations: sigma = a + b * range.
struct DetectionNoiseParams {
  double a_pos = 0.02;
  double b_pos = 0.01;
  double a_ang = 0.01;
  double b_ang = 0.005;

  double sigma_pos(double range) const { return a_pos + b_pos * range; }
  double sigma_ang(double range) const { return a_ang + b_ang * range; }
};

struct SensorNoise {
  DetectionNoiseParams detection;
  double sigma_v = 0.05;       // m/s per axis
  double sigma_omega = 0.01;   // rad/s per axis
  double dropout = 0.0;        // per-detection miss probability

  static SensorNoise none();
};

struct DroneTruth {
  int drone_id = 0;
  Pose6D pose;
  Vec3 body_velocity = Vec3::Zero();
  double yaw_rate = 0.0;
};

struct VelocityCommand {
  Vec3 body_velocity = Vec3::Zero();
  double yaw_rate = 0.0;

  static VelocityCommand hover() { return {}; }
};

/// One camera-frame observation of a marker.
struct MarkerDetection {
  int drone_id = 0;
  int marker_id = 0;
  int camera = 0;  // index into the drone's camera list
  Pose6D rel_pose;
  double range = 0.0;
  double timestamp = 0.0;
};

struct OdometryReading {
  int drone_id = 0;
  Vec3 body_velocity = Vec3::Zero();
  Vec3 euler_rates = Vec3::Zero();
  double dt = 0.0;
  double timestamp = 0.0;
};

/// Per-drone random stream. Draws depend only on (seed, drone_id) and the
/// drone's own call sequence, never on scheduling order across drones.
using Rng = std::mt19937_64;
Rng make_drone_rng(std::uint64_t seed, int drone_id);

/// First-order kinematics with roll/pitch pinned at 0; position clamped to bounds.
DroneTruth step_drone(const DroneTruth& truth, const VelocityCommand& cmd, double dt,
                      const Bounds& bounds);

std::vector<MarkerDetection> sense_markers(const DroneTruth& truth, const World& world,
                                           std::span<const CameraParams> cameras,
                                           const SensorNoise& noise, double timestamp, Rng& rng);

OdometryReading sense_odometry(const DroneTruth& prev, const DroneTruth& curr, double dt,
                               double timestamp, const SensorNoise& noise, Rng& rng);

}  // namespace mss
