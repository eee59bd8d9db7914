#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mss/json_io.hpp"
#include "mss/run_report.hpp"

namespace mss {

struct FrameMetrics {
  FrameId frame;
  int markers = 0;             // estimated markers with a ground-truth counterpart
  Pose6D alignment;            // truth ≈ alignment ∘ estimate
  double position_sse = 0.0;   // m^2
  double orientation_sse = 0.0;  // rad^2
};

struct Metrics {
  bool aligned = true;
  int marker_count = 0;
  int frame_count = 0;
  std::optional<double> marker_position_rmse;
  std::optional<double> marker_orientation_rmse;
  std::map<int, std::optional<double>> ate;  // per drone, meters
  int merge_count = 0;
  int refine_count = 0;
  int ba_runs = 0;
  int ba_iterations_total = 0;
  std::vector<FrameMetrics> per_frame;
};

/// With `align`, each frame's map is first aligned to the truth by a rigid
/// transform over its markers; otherwise frame coordinates are compared to
/// world coordinates directly.
Metrics compute_metrics(const RunReport& report, bool align = true);

/// Maps an estimate from its recorded frame to the frame that survives the
/// recorded merge chain.
FrameId resolve_frame(const RunReport& report, FrameId frame, Pose6D& pose);

json metrics_to_json(const Metrics& m);
json map_to_json(const std::vector<MapEntry>& entries);
json report_to_json(const RunReport& report, const Metrics& metrics);
/// Throws std::runtime_error (via nlohmann) on missing fields.
RunReport report_from_json(const json& j);

/// Columns: tick,sim_time,drone_id,source,x,y,z,alpha,beta,gamma. Estimates are
/// in the drone's own frame at that tick.
std::string trajectories_csv(const RunReport& report);

/// Top-down XY plot: truth markers, aligned estimated markers (class marker-est)
/// and one polyline per drone per source.
std::string render_svg(const RunReport& report);

}  // namespace mss
