#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mss/geom.hpp"

namespace mss {

/// A marker's pose and uncertainty, bound to one coordinate frame.
struct MapEntry {
  int marker_id = 0;
  FrameId frame;
  Pose6D pose;
  Covariance6 cov = Covariance6::Zero();
  int obs_count = 0;
  double last_seen = 0.0;
};

struct PoseEstimate {
  Pose6D pose;
  Covariance6 cov = Covariance6::Zero();
};

/// Fuses two estimates of the same marker. Position uses information form,
/// orientation a weighted slerp toward `b` with weight tr(A_ang)/(tr(A_ang)+tr(B_ang)).
/// The fused covariance is block diagonal.
PoseEstimate fuse_estimates(const PoseEstimate& a, const PoseEstimate& b);

/// The shared marker map kept by the ground station: entries keyed by marker
/// id (a marker lives in exactly one frame), live frames and drone membership.
class GlobalMap {
 public:
  explicit GlobalMap(int n_fuse = 5);

  int n_fuse() const { return n_fuse_; }

  std::optional<MapEntry> lookup(int marker_id) const;
  bool contains(int marker_id) const { return entries_.count(marker_id) != 0; }
  std::size_t size() const { return entries_.size(); }

  /// Throws std::invalid_argument for ids outside 0..1023 and std::logic_error
  /// for duplicates or a dead frame.
  void insert_marker(FrameId frame, int marker_id, const Pose6D& pose, const Covariance6& cov,
                     double t);

  /// Fuses while obs_count < n_fuse, afterwards only refreshes last_seen.
  /// Returns true if the pose changed. Throws std::logic_error on a missing entry.
  bool fuse_observation(int marker_id, const Pose6D& pose, const Covariance6& cov, double t);

  /// Overwrites an existing entry (merge and bundle adjustment commits).
  void replace_entry(const MapEntry& entry);
  void erase_entry(int marker_id);

  void add_frame(FrameId frame);
  void remove_frame(FrameId frame);
  bool has_frame(FrameId frame) const { return frames_.count(frame) != 0; }
  const std::set<FrameId>& frames() const { return frames_; }

  void assign_drone(int drone_id, FrameId frame);
  std::optional<FrameId> frame_of(int drone_id) const;
  std::vector<int> drones_in(FrameId frame) const;
  const std::map<int, FrameId>& drone_frames() const { return drone_frame_; }

  const std::map<int, MapEntry>& entries() const { return entries_; }
  std::vector<MapEntry> entries_in(FrameId frame) const;

  /// Throws std::logic_error if any store invariant is broken.
  void check_invariants() const;

 private:
  int n_fuse_;
  std::map<int, MapEntry> entries_;
  std::set<FrameId> frames_;
  std::map<int, FrameId> drone_frame_;
};

}  // namespace mss
