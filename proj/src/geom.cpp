#include "mss/geom.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace mss {

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

Mat3 euler_to_matrix(const Vec3& euler) {
  return euler_to_quat(euler.x(), euler.y(), euler.z()).toRotationMatrix();
}

Quat euler_to_quat(double alpha, double beta, double gamma) {
  Quat q = Eigen::AngleAxisd(gamma, Vec3::UnitZ()) *
           Eigen::AngleAxisd(beta, Vec3::UnitY()) *
           Eigen::AngleAxisd(alpha, Vec3::UnitX());
  return q.normalized();
}

Vec3 matrix_to_euler(const Mat3& r) {
  const double cb = std::hypot(r(0, 0), r(1, 0));
  const double beta = std::atan2(-r(2, 0), cb);
  if (cb < 1e-12) {
    // gimbal lock: canonical solution with alpha = 0
    return {0.0, wrap_angle(beta), wrap_angle(std::atan2(-r(0, 1), r(1, 1)))};
  }
  return {wrap_angle(std::atan2(r(2, 1), r(2, 2))), wrap_angle(beta),
          wrap_angle(std::atan2(r(1, 0), r(0, 0)))};
}

Vec3 quat_to_euler(const Quat& q) { return matrix_to_euler(q.normalized().toRotationMatrix()); }

double rotation_angle(const Mat3& r) {
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * axis.norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

Pose6D::Pose6D() : t_(Vec3::Zero()), q_(Quat::Identity()) {}

Pose6D::Pose6D(const Vec3& t, const Quat& q) : t_(t), q_(q.normalized()) {}

Pose6D Pose6D::from_euler(const Vec3& t, const Vec3& euler) {
  return {t, euler_to_quat(euler.x(), euler.y(), euler.z())};
}

Pose6D Pose6D::from_vector(const Vec6& v) { return from_euler(v.head<3>(), v.tail<3>()); }

Pose6D Pose6D::from_matrix(const Eigen::Matrix4d& m) {
  return {m.block<3, 1>(0, 3), Quat(Mat3(m.block<3, 3>(0, 0)))};
}

Vec6 Pose6D::vector() const {
  Vec6 v;
  v << t_, euler();
  return v;
}

Eigen::Matrix4d Pose6D::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = rotation_matrix();
  m.block<3, 1>(0, 3) = t_;
  return m;
}

Pose6D Pose6D::inverse() const {
  const Quat qi = q_.conjugate();
  return {-(qi * t_), qi};
}

Pose6D Pose6D::operator*(const Pose6D& b) const { return {q_ * b.t_ + t_, q_ * b.q_}; }

Covariance6 transport_covariance(const Covariance6& cov, const Mat3& frame_rot) {
  Mat6 g = Mat6::Zero();
  g.block<3, 3>(0, 0) = frame_rot;
  g.block<3, 3>(3, 3) = frame_rot;
  return symmetrized(g * cov * g.transpose());
}

bool is_symmetric(const Mat6& m, double tol) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool is_psd(const Mat6& m, double tol) {
  if (!m.allFinite()) return false;
  Eigen::SelfAdjointEigenSolver<Mat6> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

Mat6 symmetrized(const Mat6& m) { return 0.5 * (m + m.transpose()); }

}  // namespace mss
