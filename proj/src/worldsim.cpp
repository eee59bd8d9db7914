#include "mss/worldsim.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace mss {

bool Bounds::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Vec3 Bounds::clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }

void World::validate() const {
  if ((bounds.max.array() < bounds.min.array()).any()) {
    throw std::invalid_argument("world bounds: max below min");
  }
  std::set<int> seen;
  for (const auto& m : markers) {
    if (m.id < 0 || m.id > kMaxMarkerId) {
      throw std::invalid_argument("marker id out of range 0..1023: " + std::to_string(m.id));
    }
    if (!seen.insert(m.id).second) {
      throw std::invalid_argument("duplicate marker id " + std::to_string(m.id));
    }
    if (!bounds.contains(m.pose.translation())) {
      throw std::invalid_argument("marker " + std::to_string(m.id) + " outside world bounds");
    }
  }
}

const MarkerTruth* World::find(int marker_id) const {
  for (const auto& m : markers) {
    if (m.id == marker_id) return &m;
  }
  return nullptr;
}

CameraParams forward_camera(double fov_half_angle, double max_range) {
  Mat3 r;
  // columns: camera x (right), y (down), z (optical axis) in body axes
  r << 0, 0, 1,
      -1, 0, 0,
       0, -1, 0;
  return {"forward", Pose6D(Vec3::Zero(), Quat(r)), fov_half_angle, max_range};
}

CameraParams downward_camera(double fov_half_angle, double max_range) {
  Mat3 r;
  r << 0, -1, 0,
      -1, 0, 0,
       0, 0, -1;
  return {"downward", Pose6D(Vec3::Zero(), Quat(r)), fov_half_angle, max_range};
}

SensorNoise SensorNoise::none() {
  SensorNoise n;
  n.detection = {0.0, 0.0, 0.0, 0.0};
  n.sigma_v = 0.0;
  n.sigma_omega = 0.0;
  n.dropout = 0.0;
  return n;
}

Rng make_drone_rng(std::uint64_t seed, int drone_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(drone_id), 0x6d7373u};
  return Rng(seq);
}

DroneTruth step_drone(const DroneTruth& truth, const VelocityCommand& cmd, double dt,
                      const Bounds& bounds) {
  if (!(dt > 0.0 && dt <= 0.5)) throw std::invalid_argument("step_drone: dt must be in (0, 0.5]");
  if (!cmd.body_velocity.allFinite() || !std::isfinite(cmd.yaw_rate)) {
    throw std::invalid_argument("step_drone: non-finite command");
  }
  const Vec3 euler = truth.pose.euler();
  const Vec3 t =
      bounds.clamp(truth.pose.translation() + truth.pose.rotation() * cmd.body_velocity * dt);
  const double yaw = wrap_angle(euler.z() + cmd.yaw_rate * dt);

  DroneTruth next = truth;
  next.pose = Pose6D::from_euler(t, {0.0, 0.0, yaw});
  next.body_velocity = cmd.body_velocity;
  next.yaw_rate = cmd.yaw_rate;
  return next;
}

std::vector<MarkerDetection> sense_markers(const DroneTruth& truth, const World& world,
                                           std::span<const CameraParams> cameras,
                                           const SensorNoise& noise, double timestamp, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<MarkerDetection> out;

  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const CameraParams& cam = cameras[c];
    const Pose6D world_to_cam = (truth.pose * cam.extrinsics).inverse();
    for (const auto& marker : world.markers) {
      const Vec3 p = world_to_cam * marker.pose.translation();
      const double range = p.norm();
      if (range > cam.max_range || p.z() <= 0.0) continue;
      if (std::acos(std::min(1.0, p.z() / range)) > cam.fov_half_angle) continue;

      const bool dropped = uniform(rng) < noise.dropout;
      Vec6 n;
      for (int i = 0; i < 6; ++i) n[i] = gauss(rng);
      if (dropped) continue;

      // Noise is drawn in the observer pose parameters (x, y, z, alpha, beta, gamma),
      // the space in which the filter consumes the resulting pose observation.
      const double sp = noise.detection.sigma_pos(range);
      const double sa = noise.detection.sigma_ang(range);
      Vec6 observer = truth.pose.vector();
      observer.head<3>() += sp * n.head<3>();
      observer.tail<3>() += sa * n.tail<3>();
      const Pose6D noisy = Pose6D::from_vector(observer);

      MarkerDetection det;
      det.drone_id = truth.drone_id;
      det.marker_id = marker.id;
      det.camera = static_cast<int>(c);
      det.rel_pose = (noisy * cam.extrinsics).inverse() * marker.pose;
      det.range = det.rel_pose.translation().norm();
      det.timestamp = timestamp;
      out.push_back(det);
    }
  }
  return out;
}

OdometryReading sense_odometry(const DroneTruth& prev, const DroneTruth& curr, double dt,
                               double timestamp, const SensorNoise& noise, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("sense_odometry: dt must be positive");
  std::normal_distribution<double> gauss(0.0, 1.0);

  OdometryReading odo;
  odo.drone_id = curr.drone_id;
  odo.dt = dt;
  odo.timestamp = timestamp;
  odo.body_velocity = prev.pose.rotation_matrix().transpose() *
                      (curr.pose.translation() - prev.pose.translation()) / dt;
  const Vec3 e0 = prev.pose.euler();
  const Vec3 e1 = curr.pose.euler();
  for (int i = 0; i < 3; ++i) odo.euler_rates[i] = wrap_angle(e1[i] - e0[i]) / dt;

  for (int i = 0; i < 3; ++i) odo.body_velocity[i] += noise.sigma_v * gauss(rng);
  for (int i = 0; i < 3; ++i) odo.euler_rates[i] += noise.sigma_omega * gauss(rng);
  return odo;
}

}  // namespace mss
