#include "mss/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "mss/merge.hpp"

namespace mss {

FrameId resolve_frame(const RunReport& report, FrameId frame, Pose6D& pose) {
  bool moved = true;
  while (moved) {
    moved = false;
    for (const auto& m : report.merges) {
      if (m.transform.from == frame) {
        pose = m.transform.rt * pose;
        frame = m.transform.to;
        moved = true;
        break;
      }
    }
  }
  return frame;
}

Metrics compute_metrics(const RunReport& report, bool align) {
  Metrics out;
  out.aligned = align;
  out.marker_count = static_cast<int>(report.final_map.size());
  out.frame_count = static_cast<int>(report.frames.size());
  out.merge_count = static_cast<int>(report.merges.size());
  out.refine_count = static_cast<int>(report.refinements.size());
  out.ba_runs = static_cast<int>(report.ba_runs.size());
  for (const auto& b : report.ba_runs) out.ba_iterations_total += b.report.iterations;

  std::map<int, Pose6D> truth;
  for (const auto& m : report.truth_markers) truth[m.id] = m.pose;

  std::map<FrameId, Pose6D> alignment;
  double pos_sse = 0.0;
  double ang_sse = 0.0;
  int n = 0;
  for (FrameId f : report.frames) {
    std::vector<PosePair> pairs;
    std::vector<const MapEntry*> used;
    for (const auto& e : report.final_map) {
      auto it = truth.find(e.marker_id);
      if (e.frame != f || it == truth.end()) continue;
      pairs.push_back({it->second, e.pose});
      used.push_back(&e);
    }
    if (pairs.empty()) continue;
    FrameMetrics fm;
    fm.frame = f;
    fm.markers = static_cast<int>(pairs.size());
    fm.alignment = align ? estimate_transform(pairs).rt : Pose6D();
    for (const auto& p : pairs) {
      const Pose6D est = fm.alignment * p.in_b;
      fm.position_sse += (est.translation() - p.in_a.translation()).squaredNorm();
      const double ang =
          rotation_angle(p.in_a.rotation_matrix().transpose() * est.rotation_matrix());
      fm.orientation_sse += ang * ang;
    }
    pos_sse += fm.position_sse;
    ang_sse += fm.orientation_sse;
    n += fm.markers;
    alignment[f] = fm.alignment;
    out.per_frame.push_back(fm);
  }
  if (n > 0) {
    out.marker_position_rmse = std::sqrt(pos_sse / n);
    out.marker_orientation_rmse = std::sqrt(ang_sse / n);
  }

  std::map<int, std::pair<double, int>> ate_acc;
  for (int id : report.drone_ids) out.ate[id] = std::nullopt;
  std::set<int> unresolved;
  for (const auto& s : report.trajectories) {
    Pose6D est = s.estimate;
    const FrameId f = resolve_frame(report, s.frame, est);
    auto it = alignment.find(f);
    if (align && it == alignment.end()) {
      unresolved.insert(s.drone_id);
      continue;
    } else if (align) {
      est = it->second * est;
    }
    auto& [sse, count] = ate_acc[s.drone_id];
    sse += (est.translation() - s.truth.translation()).squaredNorm();
    ++count;
  }
  for (const auto& [id, acc] : ate_acc) {
    if (unresolved.count(id) || acc.second == 0) continue;
    out.ate[id] = std::sqrt(acc.first / acc.second);
  }
  return out;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json metrics_to_json(const Metrics& m) {
  json ate = json::object();
  for (const auto& [id, v] : m.ate) ate[std::to_string(id)] = optional_number(v);
  json frames = json::array();
  for (const auto& f : m.per_frame) {
    frames.push_back({{"frame", f.frame},
                      {"markers", f.markers},
                      {"alignment", f.alignment},
                      {"position_rmse", std::sqrt(f.position_sse / f.markers)},
                      {"orientation_rmse", std::sqrt(f.orientation_sse / f.markers)}});
  }
  return {{"aligned", m.aligned},
          {"marker_count", m.marker_count},
          {"frame_count", m.frame_count},
          {"marker_position_rmse", optional_number(m.marker_position_rmse)},
          {"marker_orientation_rmse", optional_number(m.marker_orientation_rmse)},
          {"ate", ate},
          {"merge_count", m.merge_count},
          {"refine_count", m.refine_count},
          {"ba_runs", m.ba_runs},
          {"ba_iterations_total", m.ba_iterations_total},
          {"per_frame", frames}};
}

json map_to_json(const std::vector<MapEntry>& entries) {
  json j = json::array();
  for (const auto& e : entries) j.push_back(e);
  return j;
}

json report_to_json(const RunReport& r, const Metrics& metrics) {
  json truth = json::array();
  for (const auto& m : r.truth_markers) truth.push_back({{"id", m.id}, {"pose", m.pose}});
  json traj = json::array();
  for (const auto& s : r.trajectories) {
    traj.push_back({{"tick", s.tick},
                    {"time", s.time},
                    {"drone_id", s.drone_id},
                    {"frame", s.frame},
                    {"truth", s.truth},
                    {"estimate", s.estimate}});
  }
  json merges = json::array();
  for (const auto& m : r.merges) {
    merges.push_back({{"time", m.time},
                      {"transform", m.transform},
                      {"matched_ids", m.matched_ids},
                      {"reassigned_drones", m.reassigned_drones},
                      {"moved_markers", m.moved_markers}});
  }
  json refinements = json::array();
  for (const auto& x : r.refinements) {
    refinements.push_back({{"time", x.time},
                           {"winner", x.winner},
                           {"loser", x.loser},
                           {"delta", x.delta},
                           {"residual_before", x.residual_before},
                           {"residual_after", x.residual_after},
                           {"support", x.support},
                           {"moved_markers", x.moved_markers}});
  }
  json ba = json::array();
  for (const auto& b : r.ba_runs) {
    ba.push_back({{"time", b.time},
                  {"frame", b.frame},
                  {"trigger", b.trigger},
                  {"keyposes", b.keyposes},
                  {"markers", b.markers},
                  {"report", b.report}});
  }
  return {{"scenario", {{"name", r.scenario_name}, {"digest", r.scenario_digest}}},
          {"seed", r.seed},
          {"mode", r.mode},
          {"tick_rate", r.tick_rate},
          {"ticks", r.ticks},
          {"drones", r.drone_ids},
          {"truth_markers", truth},
          {"map", map_to_json(r.final_map)},
          {"frames", r.frames},
          {"trajectories", traj},
          {"merges", merges},
          {"refinements", refinements},
          {"ba_runs", ba},
          {"rejected_updates", r.rejected_updates},
          {"dropped_messages", r.dropped_messages},
          {"metrics", metrics_to_json(metrics)}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.scenario_name = j.at("scenario").at("name").get<std::string>();
  r.scenario_digest = j.at("scenario").at("digest").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mode = j.at("mode").get<std::string>();
  r.tick_rate = j.at("tick_rate").get<double>();
  r.ticks = j.at("ticks").get<int>();
  r.drone_ids = j.at("drones").get<std::vector<int>>();
  for (const auto& m : j.at("truth_markers")) {
    r.truth_markers.push_back({m.at("id").get<int>(), m.at("pose").get<Pose6D>()});
  }
  r.final_map = j.at("map").get<std::vector<MapEntry>>();
  r.frames = j.at("frames").get<std::vector<FrameId>>();
  for (const auto& s : j.at("trajectories")) {
    r.trajectories.push_back({s.at("tick").get<int>(), s.at("time").get<double>(),
                              s.at("drone_id").get<int>(), s.at("frame").get<FrameId>(),
                              s.at("truth").get<Pose6D>(), s.at("estimate").get<Pose6D>()});
  }
  for (const auto& m : j.at("merges")) {
    r.merges.push_back({m.at("time").get<double>(), m.at("transform").get<FrameTransform>(),
                        m.at("matched_ids").get<std::vector<int>>(),
                        m.at("reassigned_drones").get<std::vector<int>>(),
                        m.at("moved_markers").get<std::vector<int>>()});
  }
  for (const auto& x : j.at("refinements")) {
    r.refinements.push_back({x.at("time").get<double>(), x.at("winner").get<FrameId>(),
                             x.at("loser").get<FrameId>(), x.at("delta").get<Pose6D>(),
                             x.at("residual_before").get<double>(),
                             x.at("residual_after").get<double>(), x.at("support").get<int>(),
                             x.at("moved_markers").get<std::vector<int>>()});
  }
  for (const auto& b : j.at("ba_runs")) {
    r.ba_runs.push_back({b.at("time").get<double>(), b.at("frame").get<FrameId>(),
                         b.at("trigger").get<std::string>(), b.at("keyposes").get<int>(),
                         b.at("markers").get<int>(), b.at("report").get<BaReport>()});
  }
  r.rejected_updates = j.at("rejected_updates").get<int>();
  r.dropped_messages = j.at("dropped_messages").get<int>();
  return r;
}

std::string trajectories_csv(const RunReport& r) {
  std::string out = "tick,sim_time,drone_id,source,x,y,z,alpha,beta,gamma\n";
  auto row = [&](const TrajectorySample& s, const char* source, const Pose6D& p) {
    const Vec3 t = p.translation();
    const Vec3 e = p.euler();
    out += fmt::format("{},{:.17g},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       s.tick, s.time, s.drone_id, source, t.x(), t.y(), t.z(), e.x(), e.y(),
                       e.z());
  };
  for (const auto& s : r.trajectories) {
    row(s, "truth", s.truth);
    row(s, "estimate", s.estimate);
  }
  return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string render_svg(const RunReport& r) {
  const Metrics metrics = compute_metrics(r, true);
  std::map<FrameId, Pose6D> alignment;
  for (const auto& f : metrics.per_frame) alignment[f.frame] = f.alignment;

  auto to_world = [&](FrameId frame, Pose6D pose) {
    const FrameId f = resolve_frame(r, frame, pose);
    auto it = alignment.find(f);
    return it == alignment.end() ? pose.translation() : (it->second * pose).translation();
  };

  std::vector<std::pair<int, Vec3>> est_markers;
  for (const auto& e : r.final_map) est_markers.emplace_back(e.marker_id, to_world(e.frame, e.pose));
  std::map<int, std::vector<Vec3>> truth_tracks, est_tracks;
  for (const auto& s : r.trajectories) {
    truth_tracks[s.drone_id].push_back(s.truth.translation());
    est_tracks[s.drone_id].push_back(to_world(s.frame, s.estimate));
  }

  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  auto extend = [&](const Vec3& p) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  };
  for (const auto& m : r.truth_markers) extend(m.pose.translation());
  for (const auto& [id, p] : est_markers) extend(p);
  for (const auto& [id, track] : truth_tracks) std::for_each(track.begin(), track.end(), extend);
  for (const auto& [id, track] : est_tracks) std::for_each(track.begin(), track.end(), extend);
  if (!std::isfinite(xmin)) xmin = ymin = -1.0, xmax = ymax = 1.0;
  const double pad = 0.5;
  xmin -= pad, ymin -= pad, xmax += pad, ymax += pad;

  const double size = 720.0;
  const double margin = 40.0;
  const double scale = size / std::max(xmax - xmin, ymax - ymin);
  auto sx = [&](double x) { return margin + (x - xmin) * scale; };
  auto sy = [&](double y) { return margin + (ymax - y) * scale; };
  const double w = 2 * margin + (xmax - xmin) * scale;
  const double h = 2 * margin + (ymax - ymin) * scale + 60.0;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.1f}\" height=\"{:.1f}\" "
      "viewBox=\"0 0 {:.1f} {:.1f}\">\n",
      w, h, w, h);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"white\"/>\n",
                     w, h);

  svg += "<g class=\"axes\" stroke=\"#888\" font-family=\"monospace\" font-size=\"10\">\n";
  svg += fmt::format(
      "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n"
      "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
      sx(xmin), sy(ymin), sx(xmax), sy(ymin), sx(xmin), sy(ymin), sx(xmin), sy(ymax));
  for (double x = std::ceil(xmin); x <= xmax; x += 1.0) {
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" stroke=\"none\">{:g}</text>\n", sx(x),
                       sy(ymin) + 14, x);
  }
  for (double y = std::ceil(ymin); y <= ymax; y += 1.0) {
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" stroke=\"none\">{:g}</text>\n",
                       sx(xmin) - 28, sy(y) + 4, y);
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" stroke=\"none\">x [m]</text>\n",
                     sx(xmax) - 30, sy(ymin) + 28);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" stroke=\"none\">y [m]</text>\n",
                     sx(xmin) + 4, sy(ymax) - 6);
  svg += "</g>\n";

  auto polyline = [&](const std::vector<Vec3>& pts, const char* cls, int drone, const char* color,
                      const char* dash) {
    std::string points;
    for (const auto& p : pts) points += fmt::format("{:.2f},{:.2f} ", sx(p.x()), sy(p.y()));
    if (!points.empty()) points.pop_back();
    svg += fmt::format(
        "<polyline class=\"{}\" data-drone=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" "
        "stroke-width=\"1.5\"{}/>\n",
        cls, drone, points, color, dash);
  };
  std::size_t k = 0;
  for (const auto& [id, track] : truth_tracks) {
    const char* color = kPalette[k++ % std::size(kPalette)];
    polyline(track, "traj-truth", id, color, "");
    polyline(est_tracks[id], "traj-est", id, color, " stroke-dasharray=\"4 3\"");
  }
  for (const auto& m : r.truth_markers) {
    const Vec3 p = m.pose.translation();
    svg += fmt::format(
        "<rect class=\"marker-truth\" data-id=\"{}\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" "
        "height=\"10\" fill=\"none\" stroke=\"black\"/>\n",
        m.id, sx(p.x()) - 5, sy(p.y()) - 5);
  }
  for (const auto& [id, p] : est_markers) {
    svg += fmt::format(
        "<circle class=\"marker-est\" data-id=\"{}\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" "
        "fill=\"black\"/>\n",
        id, sx(p.x()), sy(p.y()));
  }
  std::map<int, Vec3> truth_pos;
  for (const auto& m : r.truth_markers) truth_pos[m.id] = m.pose.translation();
  for (std::size_t i = 0; i < r.merges.size(); ++i) {
    const auto& m = r.merges[i];
    Vec3 at = Vec3::Zero();
    int n = 0;
    for (int id : m.matched_ids) {
      if (auto it = truth_pos.find(id); it != truth_pos.end()) at += it->second, ++n;
    }
    if (n == 0) continue;
    at /= n;
    svg += fmt::format(
        "<g class=\"merge-event\"><circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"9\" fill=\"none\" "
        "stroke=\"#e6a100\" stroke-width=\"2\"/><text x=\"{:.2f}\" y=\"{:.2f}\" "
        "font-family=\"monospace\" font-size=\"10\">merge {}: {} into {} at {:.1f} s</text></g>\n",
        sx(at.x()), sy(at.y()), sx(at.x()) + 11, sy(at.y()) - 11 - 12.0 * static_cast<double>(i % 3),
        i + 1, m.transform.from.value, m.transform.to.value, m.time);
  }

  const double ty = 2 * margin + (ymax - ymin) * scale;
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"monospace\" font-size=\"12\">"
      "{} seed {} ({}): {} markers, {} frame(s), {} merge(s), marker RMSE {}</text>\n",
      margin, ty, r.scenario_name, r.seed, r.mode, metrics.marker_count, metrics.frame_count,
      metrics.merge_count,
      metrics.marker_position_rmse ? fmt::format("{:.4f} m", *metrics.marker_position_rmse)
                                   : std::string("n/a"));
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"monospace\" font-size=\"12\">"
      "squares: true markers, dots: estimated markers, solid: true path, dashed: estimate"
      "</text>\n",
      margin, ty + 18);
  svg += "</svg>\n";
  return svg;
}

}  // namespace mss
