#pragma once

#include <compare>
#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mss {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

/// 6x6 covariance over (x, y, z, alpha, beta, gamma). Units m^2, rad^2, m*rad.
using Covariance6 = Mat6;

/// Identifier of an independent global coordinate frame. A frame is created
/// when a drone starts and destroyed only by merging.
struct FrameId {
  std::uint32_t value = 0;
  auto operator<=>(const FrameId&) const = default;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Euler triple (alpha, beta, gamma) = (roll, pitch, yaw), R = Rz(gamma) Ry(beta) Rx(alpha).
Mat3 euler_to_matrix(const Vec3& euler);
Quat euler_to_quat(double alpha, double beta, double gamma);

/// Inverse of euler_to_quat. At |beta| = pi/2 the roll is fixed to 0 and the
/// whole remaining rotation is reported as yaw.
Vec3 matrix_to_euler(const Mat3& r);
Vec3 quat_to_euler(const Quat& q);

/// Geodesic angle of a rotation matrix, accurate near 0 and pi.
double rotation_angle(const Mat3& r);

/// Rigid pose: translation in meters plus a unit quaternion orientation.
/// Euler angles only appear at the API boundary.
class Pose6D {
 public:
  Pose6D();
  Pose6D(const Vec3& t, const Quat& q);

  static Pose6D identity() { return {}; }
  static Pose6D from_euler(const Vec3& t, const Vec3& euler);
  /// (x, y, z, alpha, beta, gamma)
  static Pose6D from_vector(const Vec6& v);
  static Pose6D from_matrix(const Eigen::Matrix4d& m);

  const Vec3& translation() const { return t_; }
  const Quat& rotation() const { return q_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }
  Vec3 euler() const { return quat_to_euler(q_); }
  Vec6 vector() const;
  Eigen::Matrix4d matrix() const;

  Pose6D inverse() const;
  /// this ∘ b: apply b expressed in this pose's frame.
  Pose6D operator*(const Pose6D& b) const;
  Vec3 operator*(const Vec3& p) const { return q_ * p + t_; }

 private:
  Vec3 t_;
  Quat q_;
};

inline Pose6D compose(const Pose6D& a, const Pose6D& b) { return a * b; }
inline Pose6D inverse(const Pose6D& p) { return p.inverse(); }

/// Conjugates the position block and the angle block of `cov` by `frame_rot`.
/// The angle block uses the same rotation (small-angle transport).
Covariance6 transport_covariance(const Covariance6& cov, const Mat3& frame_rot);

bool is_symmetric(const Mat6& m, double tol = 1e-12);
bool is_psd(const Mat6& m, double tol = 1e-12);
Mat6 symmetrized(const Mat6& m);

}  // namespace mss
