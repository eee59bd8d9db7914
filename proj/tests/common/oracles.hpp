#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "json.hpp"
#include "mss/geom.hpp"

// Independent reference implementations used by the tests. They work on plain
// 4x4 homogeneous matrices and elementary axis rotations so that they share
// no code with the library.
namespace oracle {

using Mat4 = Eigen::Matrix4d;

inline Eigen::Matrix3d rx(double a) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
inline Eigen::Matrix3d ry(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
inline Eigen::Matrix3d rz(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

inline Eigen::Matrix3d rot(double alpha, double beta, double gamma) {
  return rz(gamma) * ry(beta) * rx(alpha);
}

inline Mat4 homogeneous(const Eigen::Vector3d& t, double alpha, double beta, double gamma) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rot(alpha, beta, gamma);
  m.topRightCorner<3, 1>() = t;
  return m;
}

inline Mat4 homogeneous(const mss::Vec6& v) {
  return homogeneous(v.head<3>(), v[3], v[4], v[5]);
}

/// Rigid inverse written out explicitly rather than via a general matrix inverse.
inline Mat4 rigid_inverse(const Mat4& m) {
  Mat4 out = Mat4::Identity();
  const Eigen::Matrix3d rt = m.topLeftCorner<3, 3>().transpose();
  out.topLeftCorner<3, 3>() = rt;
  out.topRightCorner<3, 1>() = -rt * m.topRightCorner<3, 1>();
  return out;
}

inline double angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

struct RandomPoses {
  std::mt19937_64 rng;
  explicit RandomPoses(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng); }

  /// Euler triple with pitch kept away from the singularity.
  mss::Vec6 vector(double trans = 5.0, double max_pitch = 1.4) {
    mss::Vec6 v;
    v << uniform(-trans, trans), uniform(-trans, trans), uniform(-trans, trans),
        uniform(-M_PI, M_PI), uniform(-max_pitch, max_pitch), uniform(-M_PI, M_PI);
    return v;
  }
  mss::Pose6D pose(double trans = 5.0) { return mss::Pose6D::from_vector(vector(trans)); }

  Eigen::Matrix<double, 6, 6> psd(double scale = 1.0) {
    Eigen::Matrix<double, 6, 6> a;
    for (int i = 0; i < 36; ++i) a(i) = normal(scale);
    return a * a.transpose() / 6.0;
  }
};

/// Structural equality with numeric leaves compared to an absolute tolerance.
/// Poses travel as Euler triples, so a decode/encode cycle may move the last digit.
inline bool json_near(const nlohmann::json& a, const nlohmann::json& b, double tol = 1e-12) {
  if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>()) <= tol;
  if (a.type() != b.type() || a.size() != b.size()) return false;
  if (a.is_array()) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!json_near(a[i], b[i], tol)) return false;
    }
    return true;
  }
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !json_near(it.value(), b.at(it.key()), tol)) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace oracle
