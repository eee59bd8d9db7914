#pragma once

#include "mss/geom.hpp"
#include "mss/mapstore.hpp"
#include "mss/worldsim.hpp"

namespace mss {

/// chi-square 6 DOF, 0.999 quantile.
inline constexpr double kInnovationGate6 = 22.457744484825323;

struct EkfParams {
  DetectionNoiseParams detection;
  Vec6 process_noise = Vec6::Zero();  // diagonal Q, per second
  bool gating = true;
  double gate_threshold = kInnovationGate6;
};

/// Filter mean h = (x, y, z, alpha, beta, gamma) and covariance, in `frame`.
struct EkfState {
  Vec6 mean = Vec6::Zero();
  Covariance6 cov = Covariance6::Zero();
  FrameId frame;
  double timestamp = 0.0;

  Pose6D pose() const { return Pose6D::from_vector(mean); }
};

/// Drone pose in its global frame computed from one marker detection.
struct PoseObservation {
  Pose6D pose;
  Covariance6 cov = Covariance6::Zero();
  int source_marker = 0;
};

/// Motion map: world-frame integration of body velocity and Euler rates.
Vec6 motion_model(const Vec6& mean, const Vec3& body_velocity, const Vec3& euler_rates, double dt);
/// Analytic Jacobian of motion_model with respect to the mean.
Mat6 motion_jacobian(const Vec6& mean, const Vec3& body_velocity, double dt);

/// Throws std::invalid_argument on non-finite odometry or dt <= 0.
EkfState predict(const EkfState& state, const OdometryReading& odo, const EkfParams& params);

/// Independent per-axis noise; diagonal, strictly positive for a positive intercept.
Covariance6 detection_noise(const MarkerDetection& det, const DetectionNoiseParams& params);

/// Throws std::logic_error when the entry is not in `drone_frame` or ids differ.
PoseObservation observation_from_marker(const MarkerDetection& det, const MapEntry& entry,
                                        const CameraParams& cam,
                                        const DetectionNoiseParams& params, FrameId drone_frame);

struct UpdateResult {
  EkfState state;
  bool accepted = true;
  double mahalanobis2 = 0.0;
};

/// Kalman update with H = I and wrapped angle residuals. Gated observations
/// leave the state untouched and report accepted = false.
UpdateResult update(const EkfState& state, const PoseObservation& obs, const EkfParams& params);

/// Re-expresses the filter in another frame: mean mapped through `rt`, covariance transported.
EkfState transform_state(const EkfState& state, const Pose6D& rt, FrameId new_frame);

}  // namespace mss
