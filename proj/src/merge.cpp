#include "mss/merge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <spdlog/spdlog.h>

namespace mss {

void PendingObservations::add(FrameId frame, int marker_id, const Pose6D& pose,
                              const Covariance6& cov, double t) {
  auto key = std::make_pair(frame, marker_id);
  auto it = items_.find(key);
  if (it == items_.end()) {
    items_[key] = PendingObservation{marker_id, frame, pose, cov, t, 1};
    return;
  }
  const PoseEstimate fused = fuse_estimates({it->second.pose, it->second.cov}, {pose, cov});
  it->second.pose = fused.pose;
  it->second.cov = fused.cov;
  it->second.last_seen = t;
  ++it->second.count;
}

void PendingObservations::put(const PendingObservation& obs) {
  auto key = std::make_pair(obs.frame, obs.marker_id);
  auto it = items_.find(key);
  if (it == items_.end()) {
    items_[key] = obs;
    return;
  }
  const PoseEstimate fused = fuse_estimates({it->second.pose, it->second.cov}, {obs.pose, obs.cov});
  it->second.pose = fused.pose;
  it->second.cov = fused.cov;
  it->second.last_seen = std::max(it->second.last_seen, obs.last_seen);
  it->second.count += obs.count;
}

std::optional<PendingObservation> PendingObservations::find(FrameId frame, int marker_id) const {
  auto it = items_.find({frame, marker_id});
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

std::vector<PendingObservation> PendingObservations::in_frame(FrameId frame) const {
  std::vector<PendingObservation> out;
  for (const auto& [key, obs] : items_) {
    if (key.first == frame) out.push_back(obs);
  }
  return out;
}

void PendingObservations::erase(FrameId frame, int marker_id) { items_.erase({frame, marker_id}); }

std::vector<int> find_matches(const GlobalMap& map, FrameId frame_a, FrameId frame_b,
                              const PendingObservations& pending) {
  if (frame_a == frame_b) throw std::logic_error("find_matches: frames must differ");
  std::vector<int> out;
  for (const auto& obs : pending.in_frame(frame_b)) {
    auto entry = map.lookup(obs.marker_id);
    if (entry && entry->frame == frame_a) out.push_back(obs.marker_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double transform_residual(const Pose6D& rt, std::span<const PosePair> pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs) {
    sum += (rt * p.in_b.translation() - p.in_a.translation()).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

namespace {

bool spread_in_two_dims(std::span<const PosePair> pairs, const Vec3& centroid) {
  if (pairs.size() < 3) return false;
  Eigen::Matrix<double, 3, Eigen::Dynamic> centered(3, pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    centered.col(static_cast<Eigen::Index>(i)) = pairs[i].in_b.translation() - centroid;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, Eigen::Dynamic>> svd(centered);
  const Vec3 s = svd.singularValues();
  return s[0] > 1e-12 && s[1] > 1e-9 * s[0];
}

}  // namespace

FrameTransform estimate_transform(std::span<const PosePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("estimate_transform: no pairs");
  for (const auto& p : pairs) {
    if (!p.in_a.vector().allFinite() || !p.in_b.vector().allFinite()) {
      throw std::invalid_argument("estimate_transform: non-finite pose");
    }
  }
  const double n = static_cast<double>(pairs.size());
  Vec3 ca = Vec3::Zero();
  Vec3 cb = Vec3::Zero();
  for (const auto& p : pairs) {
    ca += p.in_a.translation();
    cb += p.in_b.translation();
  }
  ca /= n;
  cb /= n;

  FrameTransform out;
  out.support = static_cast<int>(pairs.size());

  if (spread_in_two_dims(pairs, cb)) {
    Mat3 h = Mat3::Zero();
    double var_b = 0.0;
    for (const auto& p : pairs) {
      const Vec3 db = p.in_b.translation() - cb;
      h += db * (p.in_a.translation() - ca).transpose();
      var_b += db.squaredNorm();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Vec3 d(1.0, 1.0, 1.0);
    if ((v * u.transpose()).determinant() < 0.0) d.z() = -1.0;  // reflection
    const Mat3 r = v * d.asDiagonal() * u.transpose();
    out.rt = Pose6D(ca - r * cb, Quat(r));
    out.scale = svd.singularValues().dot(d) / var_b;
    out.point_branch = true;
    if (out.scale < 0.95 || out.scale > 1.05) {
      spdlog::warn("frame transform scale diagnostic {:.4f} outside [0.95, 1.05]", out.scale);
    }
  } else {
    // Per-pair full-pose candidates; rotation = principal eigenvector of sum q q^T.
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    Vec3 t = Vec3::Zero();
    for (const auto& p : pairs) {
      const Pose6D cand = p.in_a * p.in_b.inverse();
      const Eigen::Vector4d q = cand.rotation().coeffs();
      m += q * q.transpose();
      t += cand.translation();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m);
    Eigen::Vector4d q = es.eigenvectors().col(3);
    if (q[3] < 0.0) q = -q;
    out.rt = Pose6D(t / n, Quat(q[3], q[0], q[1], q[2]));
  }
  out.residual = transform_residual(out.rt, pairs);
  return out;
}

MergeNotice merge_frames(GlobalMap& map, FrameId winner, FrameId loser, const FrameTransform& rt,
                         PendingObservations& pending) {
  if (winner == loser) throw std::logic_error("merge_frames: cannot merge a frame with itself");
  if (!map.has_frame(winner) || !map.has_frame(loser)) {
    throw std::logic_error("merge_frames: both frames must be live");
  }
  MergeNotice notice{winner, loser, rt.rt, {}, {}};
  const Mat3 rot = rt.rt.rotation_matrix();

  for (MapEntry e : map.entries_in(loser)) {
    e.pose = rt.rt * e.pose;
    e.cov = transport_covariance(e.cov, rot);
    e.frame = winner;
    notice.moved_markers.push_back(e.marker_id);
    map.replace_entry(e);
  }

  // Loser-side pending observations move into winner coordinates.
  for (PendingObservation obs : pending.in_frame(loser)) {
    pending.erase(loser, obs.marker_id);
    obs.frame = winner;
    obs.pose = rt.rt * obs.pose;
    obs.cov = transport_covariance(obs.cov, rot);
    pending.put(obs);
  }

  // Observations that now share a frame with their marker are folded in.
  for (const auto& obs : pending.in_frame(winner)) {
    auto entry = map.lookup(obs.marker_id);
    if (!entry || entry->frame != winner) continue;
    MapEntry e = *entry;
    if (e.obs_count < map.n_fuse()) {
      const PoseEstimate fused = fuse_estimates({e.pose, e.cov}, {obs.pose, obs.cov});
      e.pose = fused.pose;
      e.cov = fused.cov;
      e.obs_count += obs.count;
    }
    e.last_seen = std::max(e.last_seen, obs.last_seen);
    map.replace_entry(e);
    pending.erase(winner, obs.marker_id);
  }

  for (int drone : map.drones_in(loser)) {
    map.assign_drone(drone, winner);
    notice.reassigned_drones.push_back(drone);
  }
  map.remove_frame(loser);
  return notice;
}

void FrameHistory::add(MergeRecord record) { records_.push_back(std::move(record)); }

void FrameHistory::on_merge(FrameId winner, FrameId loser, const Pose6D& rt) {
  for (auto& r : records_) {
    if (r.current_frame == loser) {
      r.to_current = rt * r.to_current;
      r.current_frame = winner;
    }
  }
}

std::optional<RefineCorrection> refine_transform(GlobalMap& map, FrameHistory& history,
                                                 const NewMatch& match,
                                                 const RefineThresholds& eps) {
  auto entry = map.lookup(match.marker_id);
  if (!entry || entry->frame != match.frame) return std::nullopt;

  auto& records = history.records();
  for (std::size_t idx = records.size(); idx-- > 0;) {
    MergeRecord& r = records[idx];
    if (r.current_frame != match.frame) continue;
    if (std::find(r.matched_ids.begin(), r.matched_ids.end(), match.marker_id) !=
        r.matched_ids.end()) {
      continue;
    }
    const bool winner_sees_loser =
        r.winner_drones.count(match.observer_drone) && r.loser_markers.count(match.marker_id);
    const bool loser_sees_winner =
        r.loser_drones.count(match.observer_drone) && r.winner_markers.count(match.marker_id);
    if (!winner_sees_loser && !loser_sees_winner) continue;

    const Pose6D to_winner = r.to_current.inverse();
    const Pose6D applied_inv = r.applied.inverse();
    PosePair pair;
    if (winner_sees_loser) {
      pair.in_a = to_winner * match.observed;
      pair.in_b = applied_inv * to_winner * entry->pose;
    } else {
      pair.in_a = to_winner * entry->pose;
      pair.in_b = applied_inv * to_winner * match.observed;
    }
    r.matched_ids.push_back(match.marker_id);
    r.pairs.push_back(pair);

    RefineCorrection corr;
    corr.record = idx;
    corr.residual_before = transform_residual(r.applied, r.pairs);
    corr.refined = estimate_transform(r.pairs);
    corr.refined.from = r.loser;
    corr.refined.to = r.winner;
    corr.residual_after = corr.refined.residual;

    const Pose6D delta_winner = corr.refined.rt * applied_inv;
    if (delta_winner.translation().norm() <= eps.position &&
        rotation_angle(delta_winner.rotation_matrix()) <= eps.angle) {
      return std::nullopt;
    }
    corr.delta = r.to_current * delta_winner * to_winner;
    const Mat3 rot = corr.delta.rotation_matrix();
    for (int id : r.loser_markers) {
      auto e = map.lookup(id);
      if (!e || e->frame != r.current_frame) continue;
      e->pose = corr.delta * e->pose;
      e->cov = transport_covariance(e->cov, rot);
      map.replace_entry(*e);
      corr.moved_markers.push_back(id);
    }
    r.applied = corr.refined.rt;
    return corr;
  }
  return std::nullopt;
}

}  // namespace mss
