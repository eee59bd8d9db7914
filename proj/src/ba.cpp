#include "mss/ba.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/AutoDiff>

namespace mss {

bool select_keypose(const Pose6D& current, const std::optional<Pose6D>& last, bool marker_visible,
                    const KeyposeParams& params) {
  if (!marker_visible) return false;
  if (!last) return true;
  const Pose6D delta = last->inverse() * current;
  return delta.translation().norm() > params.d_key ||
         rotation_angle(delta.rotation_matrix()) > params.theta_key;
}

namespace {

using Jet = Eigen::AutoDiffScalar<Eigen::Matrix<double, 12, 1>>;

template <typename T>
using M3 = Eigen::Matrix<T, 3, 3>;
template <typename T>
using V3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using V6 = Eigen::Matrix<T, 6, 1>;

double value_of(double x) { return x; }
double value_of(const Jet& x) { return x.value(); }

// Rotation of the normalized quaternion (1, d/2); a retraction with identity
// first derivative at d = 0.
template <typename T>
M3<T> increment_rotation(const V3<T>& d) {
  using std::sqrt;
  const T hx = d.x() * 0.5, hy = d.y() * 0.5, hz = d.z() * 0.5;
  const T n = sqrt(T(1.0) + hx * hx + hy * hy + hz * hz);
  const T w = T(1.0) / n, x = hx / n, y = hy / n, z = hz / n;
  M3<T> r;
  r << T(1.0) - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), T(1.0) - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), T(1.0) - 2.0 * (x * x + y * y);
  return r;
}

template <typename T>
V3<T> euler_of(const M3<T>& r) {
  using std::atan2;
  using std::sqrt;
  const T cb = sqrt(r(0, 0) * r(0, 0) + r(1, 0) * r(1, 0));
  return {atan2(r(2, 1), r(2, 2)), atan2(-r(2, 0), cb), atan2(r(1, 0), r(0, 0))};
}

template <typename T>
T wrapped(const T& a) {
  const double v = value_of(a);
  return a + (wrap_angle(v) - v);
}

template <typename T>
V6<T> observation_residual(const Keypose& kp, const KeyposeObservation& obs, const Pose6D& marker,
                           const V6<T>& dk, const V6<T>& dm, const Mat6& whitener) {
  const M3<T> rk = increment_rotation<T>(dk.template tail<3>()) *
                   kp.pose.rotation_matrix().template cast<T>();
  const V3<T> tk = kp.pose.translation().template cast<T>() + dk.template head<3>();
  const M3<T> rm = increment_rotation<T>(dm.template tail<3>()) *
                   marker.rotation_matrix().template cast<T>();
  const V3<T> tm = marker.translation().template cast<T>() + dm.template head<3>();

  const M3<T> rc = rk * obs.extrinsics.rotation_matrix().template cast<T>();
  const V3<T> tc = tk + rk * obs.extrinsics.translation().template cast<T>();
  const M3<T> rp = rc.transpose() * rm;
  const V3<T> tp = rc.transpose() * (tm - tc);

  const Vec3 e_obs = obs.rel_pose.euler();
  const V3<T> e_pred = euler_of<T>(rp);
  V6<T> r;
  r.template head<3>() = tp - obs.rel_pose.translation().template cast<T>();
  for (int i = 0; i < 3; ++i) r[3 + i] = wrapped<T>(e_pred[i] - e_obs[i]);
  return whitener.template cast<T>() * r;
}

Mat6 whitener_of(const Covariance6& noise) {
  Eigen::LLT<Mat6> llt(symmetrized(noise));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("bundle adjustment: observation noise not positive definite");
  }
  return llt.matrixL().solve(Mat6::Identity());
}

struct Layout {
  std::vector<Eigen::Index> keypose_col;  // -1 for the anchor
  std::map<int, Eigen::Index> marker_col;
  Eigen::Index cols = 0;
};

Layout layout_of(const BaProblem& p) {
  Layout l;
  for (std::size_t i = 0; i < p.keyposes.size(); ++i) {
    if (i == p.anchor) {
      l.keypose_col.push_back(-1);
    } else {
      l.keypose_col.push_back(l.cols);
      l.cols += 6;
    }
  }
  for (const auto& [id, pose] : p.markers) {
    l.marker_col[id] = l.cols;
    l.cols += 6;
  }
  return l;
}

Pose6D retract_pose(const Pose6D& p, const Vec6& d) {
  const Mat3 r = increment_rotation<double>(d.tail<3>()) * p.rotation_matrix();
  return {p.translation() + d.head<3>(), Quat(r)};
}

}  // namespace

void BaProblem::validate() const {
  if (keyposes.empty()) throw std::invalid_argument("bundle adjustment: no keyposes");
  if (anchor >= keyposes.size()) throw std::invalid_argument("bundle adjustment: bad anchor");
  std::map<int, int> seen;
  for (const auto& kp : keyposes) {
    if (kp.observations.empty()) {
      throw std::invalid_argument("bundle adjustment: keypose without observations");
    }
    for (const auto& obs : kp.observations) {
      if (!markers.count(obs.marker_id)) {
        throw std::invalid_argument("bundle adjustment: observation of unknown marker " +
                                    std::to_string(obs.marker_id));
      }
      ++seen[obs.marker_id];
    }
  }
  for (const auto& [id, pose] : markers) {
    if (!seen.count(id)) {
      throw std::invalid_argument("bundle adjustment: marker " + std::to_string(id) +
                                  " is never observed");
    }
  }
}

Eigen::Index BaProblem::num_variables() const {
  const auto k = static_cast<Eigen::Index>(keyposes.size());
  return 6 * (k > 0 ? k - 1 : 0) + 6 * static_cast<Eigen::Index>(markers.size());
}

Eigen::Index BaProblem::num_residuals() const {
  Eigen::Index n = 0;
  for (const auto& kp : keyposes) n += 6 * static_cast<Eigen::Index>(kp.observations.size());
  return n;
}

Eigen::VectorXd residuals(const BaProblem& problem) {
  Eigen::VectorXd r(problem.num_residuals());
  Eigen::Index row = 0;
  const Vec6 zero = Vec6::Zero();
  for (const auto& kp : problem.keyposes) {
    for (const auto& obs : kp.observations) {
      r.segment<6>(row) = observation_residual<double>(kp, obs, problem.markers.at(obs.marker_id),
                                                       zero, zero, whitener_of(obs.noise));
      row += 6;
    }
  }
  return r;
}

BaLinearization linearize(const BaProblem& problem) {
  const Layout layout = layout_of(problem);
  BaLinearization lin;
  lin.residuals.resize(problem.num_residuals());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::Index row = 0;

  V6<Jet> dk, dm;
  for (int i = 0; i < 6; ++i) {
    dk[i] = Jet(0.0, 12, i);
    dm[i] = Jet(0.0, 12, 6 + i);
  }
  for (std::size_t k = 0; k < problem.keyposes.size(); ++k) {
    const Keypose& kp = problem.keyposes[k];
    const Eigen::Index kcol = layout.keypose_col[k];
    for (const auto& obs : kp.observations) {
      const V6<Jet> r = observation_residual<Jet>(kp, obs, problem.markers.at(obs.marker_id), dk,
                                                  dm, whitener_of(obs.noise));
      const Eigen::Index mcol = layout.marker_col.at(obs.marker_id);
      for (int i = 0; i < 6; ++i) {
        lin.residuals[row + i] = r[i].value();
        const auto& der = r[i].derivatives();
        for (int j = 0; j < 6; ++j) {
          if (kcol >= 0 && der[j] != 0.0) triplets.emplace_back(row + i, kcol + j, der[j]);
          if (der[6 + j] != 0.0) triplets.emplace_back(row + i, mcol + j, der[6 + j]);
        }
      }
      row += 6;
    }
  }
  lin.jacobian.resize(row, layout.cols);
  lin.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return lin;
}

double ba_cost(const BaProblem& problem) { return 0.5 * residuals(problem).squaredNorm(); }

BaProblem retract(const BaProblem& problem, const Eigen::VectorXd& delta) {
  const Layout layout = layout_of(problem);
  if (delta.size() != layout.cols) throw std::invalid_argument("retract: increment size mismatch");
  BaProblem out = problem;
  for (std::size_t k = 0; k < out.keyposes.size(); ++k) {
    const Eigen::Index col = layout.keypose_col[k];
    if (col >= 0) out.keyposes[k].pose = retract_pose(out.keyposes[k].pose, delta.segment<6>(col));
  }
  for (auto& [id, pose] : out.markers) {
    pose = retract_pose(pose, delta.segment<6>(layout.marker_col.at(id)));
  }
  return out;
}

BaResult optimize(const BaProblem& problem, const BaConfig& config) {
  problem.validate();
  if (problem.num_variables() == 0) {
    throw std::invalid_argument("bundle adjustment: no free variables besides the anchor");
  }
  BaResult result{problem, {}};
  BaReport& rep = result.report;

  BaProblem x = problem;
  BaLinearization lin = linearize(x);
  double cost = 0.5 * lin.residuals.squaredNorm();
  rep.initial_cost = cost;

  Eigen::SparseMatrix<double> h = lin.jacobian.transpose() * lin.jacobian;
  double lambda = config.initial_damping_factor * std::max(1e-12, h.diagonal().maxCoeff());
  Eigen::SparseMatrix<double> eye(h.rows(), h.cols());
  eye.setIdentity();

  rep.termination = "max_iterations";
  while (rep.iterations < config.max_iterations) {
    const Eigen::VectorXd g = lin.jacobian.transpose() * lin.residuals;
    if (g.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      rep.termination = "gradient";
      break;
    }
    ++rep.iterations;
    rep.damping_trace.push_back(lambda);

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h + lambda * eye);
    Eigen::VectorXd step;
    bool solved = solver.info() == Eigen::Success;
    if (solved) {
      step = solver.solve(-g);
      solved = solver.info() == Eigen::Success && step.allFinite();
    }
    if (!solved) {
      lambda *= 10.0;
      if (lambda > config.max_damping) {
        rep.aborted = true;
        rep.termination = "singular";
        rep.diagnostic = "damped normal equations singular at maximum damping";
        rep.final_cost = rep.initial_cost;
        result.problem = problem;
        return result;
      }
      continue;
    }

    BaProblem candidate = retract(x, step);
    const double new_cost = ba_cost(candidate);
    if (new_cost < cost) {
      const double rel = (cost - new_cost) / cost;
      x = std::move(candidate);
      cost = new_cost;
      rep.cost_trace.push_back(cost);
      lambda = std::max(lambda / 10.0, 1e-300);
      lin = linearize(x);
      h = lin.jacobian.transpose() * lin.jacobian;
      if (rel < config.relative_cost_tolerance) {
        rep.termination = "relative_cost";
        break;
      }
    } else {
      if (step.lpNorm<Eigen::Infinity>() < 1e-14) {
        rep.termination = "step_size";
        break;
      }
      lambda *= 10.0;
      if (lambda > config.max_damping) {
        rep.termination = "no_decrease";
        break;
      }
    }
  }
  rep.final_cost = cost;
  result.problem = std::move(x);
  return result;
}

}  // namespace mss
