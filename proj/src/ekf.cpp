#include "mss/ekf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace mss {
namespace {

Mat3 rot_x(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}
Mat3 rot_y(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}
Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}
Mat3 drot_x(double a) {
  Mat3 r;
  r << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return r;
}
Mat3 drot_y(double a) {
  Mat3 r;
  r << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
  return r;
}
Mat3 drot_z(double a) {
  Mat3 r;
  r << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
  return r;
}

void wrap_angles(Vec6& v) {
  for (int i = 3; i < 6; ++i) v[i] = wrap_angle(v[i]);
}

}  // namespace

Vec6 motion_model(const Vec6& mean, const Vec3& body_velocity, const Vec3& euler_rates,
                  double dt) {
  const Vec3 e = mean.tail<3>();
  const Mat3 r = rot_z(e.z()) * rot_y(e.y()) * rot_x(e.x());
  Vec6 out;
  out.head<3>() = mean.head<3>() + r * body_velocity * dt;
  out.tail<3>() = e + euler_rates * dt;
  wrap_angles(out);
  return out;
}

Mat6 motion_jacobian(const Vec6& mean, const Vec3& body_velocity, double dt) {
  const double a = mean[3], b = mean[4], g = mean[5];
  Mat6 f = Mat6::Identity();
  f.block<3, 1>(0, 3) = rot_z(g) * rot_y(b) * drot_x(a) * body_velocity * dt;
  f.block<3, 1>(0, 4) = rot_z(g) * drot_y(b) * rot_x(a) * body_velocity * dt;
  f.block<3, 1>(0, 5) = drot_z(g) * rot_y(b) * rot_x(a) * body_velocity * dt;
  return f;
}

EkfState predict(const EkfState& state, const OdometryReading& odo, const EkfParams& params) {
  if (!(odo.dt > 0.0) || !std::isfinite(odo.dt) || !odo.body_velocity.allFinite() ||
      !odo.euler_rates.allFinite()) {
    throw std::invalid_argument("predict: non-finite odometry or dt <= 0");
  }
  const Mat6 f = motion_jacobian(state.mean, odo.body_velocity, odo.dt);
  EkfState out = state;
  out.mean = motion_model(state.mean, odo.body_velocity, odo.euler_rates, odo.dt);
  Mat6 q = Mat6::Zero();
  q.diagonal() = params.process_noise * odo.dt;
  out.cov = symmetrized(f * state.cov * f.transpose() + q);
  out.timestamp = odo.timestamp;
  return out;
}

Covariance6 detection_noise(const MarkerDetection& det, const DetectionNoiseParams& params) {
  const double sp = params.sigma_pos(det.range);
  const double sa = params.sigma_ang(det.range);
  Covariance6 c = Covariance6::Zero();
  c.diagonal() << sp * sp, sp * sp, sp * sp, sa * sa, sa * sa, sa * sa;
  return c;
}

PoseObservation observation_from_marker(const MarkerDetection& det, const MapEntry& entry,
                                        const CameraParams& cam,
                                        const DetectionNoiseParams& params, FrameId drone_frame) {
  if (entry.frame != drone_frame) {
    throw std::logic_error("observation_from_marker: marker lives in another frame");
  }
  if (entry.marker_id != det.marker_id) {
    throw std::logic_error("observation_from_marker: marker id mismatch");
  }
  PoseObservation obs;
  obs.pose = entry.pose * det.rel_pose.inverse() * cam.extrinsics.inverse();
  obs.cov = transport_covariance(detection_noise(det, params), obs.pose.rotation_matrix()) +
            entry.cov;
  obs.source_marker = det.marker_id;
  return obs;
}

UpdateResult update(const EkfState& state, const PoseObservation& obs, const EkfParams& params) {
  Vec6 innovation = obs.pose.vector() - state.mean;
  wrap_angles(innovation);
  const Mat6 s = symmetrized(state.cov + obs.cov);
  const Eigen::LDLT<Mat6> s_ldlt(s);
  if (s_ldlt.info() != Eigen::Success) {
    return {state, false, std::numeric_limits<double>::infinity()};
  }
  const double d2 = innovation.dot(s_ldlt.solve(innovation));
  if (params.gating && !(d2 <= params.gate_threshold)) return {state, false, d2};

  const Mat6 k = s_ldlt.solve(state.cov).transpose();  // P S^-1, both symmetric
  const Mat6 i_k = Mat6::Identity() - k;
  EkfState out = state;
  out.mean = state.mean + k * innovation;
  wrap_angles(out.mean);
  out.cov = symmetrized(i_k * state.cov * i_k.transpose() + k * obs.cov * k.transpose());
  return {out, true, d2};
}

EkfState transform_state(const EkfState& state, const Pose6D& rt, FrameId new_frame) {
  EkfState out = state;
  out.mean = (rt * state.pose()).vector();
  out.cov = transport_covariance(state.cov, rt.rotation_matrix());
  out.frame = new_frame;
  return out;
}

}  // namespace mss
