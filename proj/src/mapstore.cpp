#include "mss/mapstore.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace mss {
namespace {

struct Fused3 {
  Vec3 mean;
  Mat3 cov;
};

// Information-form fusion of two Gaussian estimates of a 3-vector.
Fused3 fuse_information(const Vec3& ma, const Mat3& ca, const Vec3& mb, const Mat3& cb) {
  Eigen::LLT<Mat3> la(ca);
  Eigen::LLT<Mat3> lb(cb);
  if (la.info() == Eigen::Success && lb.info() == Eigen::Success) {
    const Mat3 ia = la.solve(Mat3::Identity());
    const Mat3 ib = lb.solve(Mat3::Identity());
    const Mat3 info = ia + ib;
    const Mat3 cov = info.ldlt().solve(Mat3::Identity());
    const Vec3 mean = cov * (ia * ma + ib * mb);
    return {mean, 0.5 * (cov + cov.transpose())};
  }
  // A singular input: covariance form, which tolerates one exact estimate.
  const Mat3 gain = ca * (ca + cb).completeOrthogonalDecomposition().pseudoInverse();
  const Vec3 mean = ma + gain * (mb - ma);
  const Mat3 cov = ca - gain * ca;
  return {mean, 0.5 * (cov + cov.transpose())};
}

}  // namespace

PoseEstimate fuse_estimates(const PoseEstimate& a, const PoseEstimate& b) {
  const Fused3 pos = fuse_information(a.pose.translation(), a.cov.block<3, 3>(0, 0),
                                      b.pose.translation(), b.cov.block<3, 3>(0, 0));
  const Mat3 ang_a = a.cov.block<3, 3>(3, 3);
  const Mat3 ang_b = b.cov.block<3, 3>(3, 3);
  const double ta = ang_a.trace();
  const double tb = ang_b.trace();
  const double w = (ta + tb) > 0.0 ? ta / (ta + tb) : 0.5;
  const Quat q = a.pose.rotation().slerp(w, b.pose.rotation());
  const Fused3 ang = fuse_information(Vec3::Zero(), ang_a, Vec3::Zero(), ang_b);

  PoseEstimate out;
  out.pose = Pose6D(pos.mean, q);
  out.cov.setZero();
  out.cov.block<3, 3>(0, 0) = pos.cov;
  out.cov.block<3, 3>(3, 3) = ang.cov;
  return out;
}

GlobalMap::GlobalMap(int n_fuse) : n_fuse_(n_fuse) {
  if (n_fuse < 1) throw std::invalid_argument("n_fuse must be >= 1");
}

std::optional<MapEntry> GlobalMap::lookup(int marker_id) const {
  auto it = entries_.find(marker_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void GlobalMap::insert_marker(FrameId frame, int marker_id, const Pose6D& pose,
                              const Covariance6& cov, double t) {
  if (marker_id < 0 || marker_id > 1023) {
    throw std::invalid_argument("marker id out of range 0..1023: " + std::to_string(marker_id));
  }
  if (entries_.count(marker_id) != 0) {
    throw std::logic_error("insert_marker: marker " + std::to_string(marker_id) +
                           " already in map");
  }
  if (!has_frame(frame)) throw std::logic_error("insert_marker: frame is not live");
  entries_[marker_id] = MapEntry{marker_id, frame, pose, symmetrized(cov), 1, t};
}

bool GlobalMap::fuse_observation(int marker_id, const Pose6D& pose, const Covariance6& cov,
                                 double t) {
  auto it = entries_.find(marker_id);
  if (it == entries_.end()) {
    throw std::logic_error("fuse_observation: marker " + std::to_string(marker_id) +
                           " not in map");
  }
  MapEntry& e = it->second;
  e.last_seen = t;
  if (e.obs_count >= n_fuse_) return false;
  const PoseEstimate fused = fuse_estimates({e.pose, e.cov}, {pose, cov});
  e.pose = fused.pose;
  e.cov = fused.cov;
  ++e.obs_count;
  return true;
}

void GlobalMap::replace_entry(const MapEntry& entry) {
  auto it = entries_.find(entry.marker_id);
  if (it == entries_.end()) throw std::logic_error("replace_entry: unknown marker");
  if (!has_frame(entry.frame)) throw std::logic_error("replace_entry: frame is not live");
  it->second = entry;
}

void GlobalMap::erase_entry(int marker_id) { entries_.erase(marker_id); }

void GlobalMap::add_frame(FrameId frame) { frames_.insert(frame); }

void GlobalMap::remove_frame(FrameId frame) {
  for (const auto& [id, e] : entries_) {
    if (e.frame == frame) throw std::logic_error("remove_frame: frame still holds markers");
  }
  for (const auto& [drone, f] : drone_frame_) {
    if (f == frame) throw std::logic_error("remove_frame: frame still holds drones");
  }
  frames_.erase(frame);
}

void GlobalMap::assign_drone(int drone_id, FrameId frame) {
  if (!has_frame(frame)) throw std::logic_error("assign_drone: frame is not live");
  drone_frame_[drone_id] = frame;
}

std::optional<FrameId> GlobalMap::frame_of(int drone_id) const {
  auto it = drone_frame_.find(drone_id);
  if (it == drone_frame_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> GlobalMap::drones_in(FrameId frame) const {
  std::vector<int> out;
  for (const auto& [drone, f] : drone_frame_) {
    if (f == frame) out.push_back(drone);
  }
  return out;
}

std::vector<MapEntry> GlobalMap::entries_in(FrameId frame) const {
  std::vector<MapEntry> out;
  for (const auto& [id, e] : entries_) {
    if (e.frame == frame) out.push_back(e);
  }
  return out;
}

void GlobalMap::check_invariants() const {
  for (const auto& [id, e] : entries_) {
    if (id != e.marker_id) throw std::logic_error("map key does not match entry id");
    if (!has_frame(e.frame)) throw std::logic_error("entry bound to a dead frame");
    if (!is_psd(e.cov, 1e-9)) throw std::logic_error("entry covariance not PSD");
  }
  for (const auto& [drone, f] : drone_frame_) {
    if (!has_frame(f)) throw std::logic_error("drone assigned to a dead frame");
  }
}

}  // namespace mss
