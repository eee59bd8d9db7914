#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "mss/geom.hpp"
#include "mss/mapstore.hpp"

namespace mss {

/// Rigid transform taking `from`-frame coordinates into the `to` frame.
struct FrameTransform {
  FrameId from;
  FrameId to;
  Pose6D rt;
  double residual = 0.0;  // RMS position error over the matches, meters
  int support = 0;
  double scale = 1.0;     // similarity scale diagnostic, only meaningful for the point branch
  bool point_branch = false;
};

/// The same marker seen in frame a and in frame b.
struct PosePair {
  Pose6D in_a;
  Pose6D in_b;
};

/// Observations of markers held by another frame, expressed in the
/// observer's frame, waiting for a merge.
struct PendingObservation {
  int marker_id = 0;
  FrameId frame;
  Pose6D pose;
  Covariance6 cov = Covariance6::Zero();
  double last_seen = 0.0;
  int count = 0;
};

class PendingObservations {
 public:
  /// Repeated observations of the same (frame, marker) are fused.
  void add(FrameId frame, int marker_id, const Pose6D& pose, const Covariance6& cov, double t);
  /// Inserts keeping the observation count; fuses with an existing item.
  void put(const PendingObservation& obs);
  std::optional<PendingObservation> find(FrameId frame, int marker_id) const;
  std::vector<PendingObservation> in_frame(FrameId frame) const;
  void erase(FrameId frame, int marker_id);
  std::size_t size() const { return items_.size(); }

 private:
  std::map<std::pair<FrameId, int>, PendingObservation> items_;
};

/// Ids with a map entry in frame_a and a pending observation from frame_b, sorted.
std::vector<int> find_matches(const GlobalMap& map, FrameId frame_a, FrameId frame_b,
                              const PendingObservations& pending);

/// Rigid transform rt with in_a ≈ rt ∘ in_b. Kabsch on positions for three or
/// more non-collinear pairs, otherwise the chordal mean of per-pair full-pose
/// transforms. Throws std::invalid_argument on an empty or non-finite input.
FrameTransform estimate_transform(std::span<const PosePair> pairs);

/// RMS of ‖rt ∘ in_b − in_a‖ over the pairs.
double transform_residual(const Pose6D& rt, std::span<const PosePair> pairs);

struct MergeNotice {
  FrameId winner;
  FrameId loser;
  Pose6D rt;
  std::vector<int> reassigned_drones;
  std::vector<int> moved_markers;
};

/// Re-expresses every loser entry in the winner frame, folds pending
/// observations that now share a frame with their marker, reassigns drones,
/// and destroys the loser frame. `rt` maps loser coordinates into the winner.
MergeNotice merge_frames(GlobalMap& map, FrameId winner, FrameId loser, const FrameTransform& rt,
                         PendingObservations& pending);

/// One applied merge, kept so later cross-side matches can refine its transform.
struct MergeRecord {
  FrameId winner;
  FrameId loser;
  Pose6D applied;     // loser coords -> winner coords as of the merge
  Pose6D to_current;  // winner coords as of the merge -> coords of current_frame
  FrameId current_frame;
  double time = 0.0;
  std::vector<int> matched_ids;
  std::vector<PosePair> pairs;  // (winner coords, loser coords)
  std::set<int> winner_drones, loser_drones;
  std::set<int> winner_markers, loser_markers;
};

class FrameHistory {
 public:
  void add(MergeRecord record);
  /// Keeps earlier records pointing at the frame that now holds their data.
  void on_merge(FrameId winner, FrameId loser, const Pose6D& rt);
  std::vector<MergeRecord>& records() { return records_; }
  const std::vector<MergeRecord>& records() const { return records_; }

 private:
  std::vector<MergeRecord> records_;
};

/// A marker observed in `frame` (current coordinates) by `observer_drone`.
struct NewMatch {
  int marker_id = 0;
  int observer_drone = 0;
  FrameId frame;
  Pose6D observed;
};

struct RefineCorrection {
  std::size_t record = 0;
  Pose6D delta;  // applied to the affected entries, current coordinates
  FrameTransform refined;
  double residual_before = 0.0;
  double residual_after = 0.0;
  std::vector<int> moved_markers;
};

struct RefineThresholds {
  double position = 1e-3;  // m
  double angle = 1e-3;     // rad
};

/// When `match` pairs a winner-side observer with a loser-side marker (or the
/// reverse) for the first time, re-estimates that merge's transform over all
/// its matches and re-transforms loser-side entries if the change exceeds
/// the thresholds.
std::optional<RefineCorrection> refine_transform(GlobalMap& map, FrameHistory& history,
                                                 const NewMatch& match,
                                                 const RefineThresholds& eps = {});

}  // namespace mss
