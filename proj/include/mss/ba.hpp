#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mss/geom.hpp"

namespace mss {

struct KeyposeParams {
  double d_key = 0.5;       // m
  double theta_key = 0.35;  // rad
};

/// True iff a marker is visible and the pose moved more than d_key or turned
/// more than theta_key since `last` (any visible pose qualifies when there is no last).
bool select_keypose(const Pose6D& current, const std::optional<Pose6D>& last, bool marker_visible,
                    const KeyposeParams& params = {});

struct KeyposeObservation {
  int marker_id = 0;
  int camera = 0;
  Pose6D extrinsics;  // camera in body frame
  Pose6D rel_pose;    // marker in camera frame
  Covariance6 noise = Covariance6::Identity();
};

struct Keypose {
  int drone_id = 0;
  FrameId frame;
  Pose6D pose;
  double timestamp = 0.0;
  std::vector<KeyposeObservation> observations;
};

/// Variables are every keypose except the anchor plus every marker, each
/// updated by a left-multiplied rotation increment and an additive translation.
struct BaProblem {
  std::vector<Keypose> keyposes;
  std::map<int, Pose6D> markers;
  std::size_t anchor = 0;

  /// Throws std::invalid_argument if an observation references a missing
  /// marker, a marker is never observed, a keypose has no observation, or the
  /// anchor index is out of range.
  void validate() const;
  Eigen::Index num_variables() const;
  Eigen::Index num_residuals() const;
};

struct BaLinearization {
  Eigen::VectorXd residuals;
  Eigen::SparseMatrix<double> jacobian;
};

/// Whitened residual stack: per observation [t_pred - t_obs, wrap(euler_pred - euler_obs)].
Eigen::VectorXd residuals(const BaProblem& problem);
BaLinearization linearize(const BaProblem& problem);
double ba_cost(const BaProblem& problem);

/// Applies a stacked increment (variable order: non-anchor keyposes, then markers by id).
BaProblem retract(const BaProblem& problem, const Eigen::VectorXd& delta);

struct BaConfig {
  int max_iterations = 100;
  double initial_damping_factor = 1e-4;  // times the largest diagonal of J^T J
  double relative_cost_tolerance = 1e-9;
  double gradient_tolerance = 1e-10;
  double max_damping = 1e16;
};

struct BaReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> damping_trace;  // damping used at each iteration
  std::vector<double> cost_trace;     // cost after each accepted step
  std::string termination;
  bool aborted = false;
  std::string diagnostic;
};

struct BaResult {
  BaProblem problem;  // input problem when aborted
  BaReport report;
};

/// Levenberg-Marquardt on the damped normal equations.
BaResult optimize(const BaProblem& problem, const BaConfig& config = {});

}  // namespace mss
