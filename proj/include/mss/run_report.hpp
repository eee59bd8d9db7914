#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mss/ba.hpp"
#include "mss/mapstore.hpp"
#include "mss/merge.hpp"
#include "mss/worldsim.hpp"

namespace mss {

struct MergeEvent {
  double time = 0.0;
  FrameTransform transform;  // from = loser, to = winner
  std::vector<int> matched_ids;
  std::vector<int> reassigned_drones;
  std::vector<int> moved_markers;
};

struct RefineEvent {
  double time = 0.0;
  FrameId winner;
  FrameId loser;
  Pose6D delta;
  double residual_before = 0.0;
  double residual_after = 0.0;
  int support = 0;
  std::vector<int> moved_markers;
};

struct BaEvent {
  double time = 0.0;
  FrameId frame;
  std::string trigger;  // merge | keyposes
  int keyposes = 0;
  int markers = 0;
  BaReport report;
};

struct TrajectorySample {
  int tick = 0;
  double time = 0.0;
  int drone_id = 0;
  FrameId frame;  // frame of `estimate`
  Pose6D truth;
  Pose6D estimate;
};

struct RunReport {
  std::string scenario_name;
  std::string scenario_digest;
  std::uint64_t seed = 0;
  std::string mode;
  double tick_rate = 0.0;
  int ticks = 0;
  std::vector<int> drone_ids;
  std::vector<MarkerTruth> truth_markers;
  std::vector<MapEntry> final_map;
  std::vector<FrameId> frames;
  std::vector<TrajectorySample> trajectories;  // ordered by (tick, drone_id)
  std::vector<MergeEvent> merges;
  std::vector<RefineEvent> refinements;
  std::vector<BaEvent> ba_runs;
  int rejected_updates = 0;
  int dropped_messages = 0;
};

}  // namespace mss
