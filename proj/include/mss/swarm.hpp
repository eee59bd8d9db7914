#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "mss/ba.hpp"
#include "mss/ekf.hpp"
#include "mss/mapstore.hpp"
#include "mss/merge.hpp"
#include "mss/protocol.hpp"
#include "mss/run_report.hpp"
#include "mss/scenario.hpp"
#include "mss/transport.hpp"
#include "mss/worldsim.hpp"

namespace mss {

/// Grid sweep over a rectangular region at fixed altitude. Cell centers are
/// held in the drone's current frame.
class SweepPolicy {
 public:
  SweepPolicy(const Bounds& region, double altitude, const PolicyParams& params);

  /// Re-expresses the cell centers after the owning frame changes (x_new = rt ∘ x_old).
  void transform(const Pose6D& rt);

  /// Marks cells reached by `estimate`, picks the nearest unvisited cell and
  /// returns a body-frame velocity toward it.
  VelocityCommand choose_destination(const Pose6D& estimate);

  const std::vector<Vec3>& centers() const { return centers_; }
  const std::vector<bool>& visited() const { return visited_; }
  std::optional<std::size_t> target() const { return target_; }
  int sweeps_completed() const { return sweeps_; }

 private:
  void mark_visited(const Vec3& p);

  PolicyParams params_;
  std::vector<Vec3> centers_;  // index iy * nx + ix
  std::vector<bool> visited_;
  std::optional<std::size_t> target_;
  int sweeps_ = 0;
};

struct NodeConfig {
  int drone_id = 0;
  std::vector<CameraParams> cameras;
  EkfParams ekf;
  KeyposeParams keypose;
  int n_fuse = 5;
};

struct TickInputs {
  OdometryReading odometry;
  std::vector<MarkerDetection> detections;
  double time = 0.0;
};

struct TickResult {
  VelocityCommand command;
  std::vector<protocol::Message> outbound;
  int ekf_updates = 0;
  int rejected_updates = 0;
};

/// On-board loop: sensor processing, visual correction, map synchronization
/// and behavior generation, run once per tick in that order.
class NavptsNode {
 public:
  NavptsNode(NodeConfig config, SweepPolicy policy, const Pose6D& start_pose);

  protocol::Message hello() const;
  TickResult tick(const TickInputs& inputs, std::span<const protocol::Message> inbound);

  int drone_id() const { return config_.drone_id; }
  const EkfState& state() const { return state_; }
  FrameId frame() const { return state_.frame; }
  const SweepPolicy& policy() const { return policy_; }
  const std::map<int, MapEntry>& map_view() const { return view_; }
  bool shutdown_requested() const { return shutdown_; }

 private:
  void apply_inbound(const protocol::Message& msg);

  NodeConfig config_;
  SweepPolicy policy_;
  Pose6D start_pose_;
  EkfState state_;
  std::map<int, MapEntry> view_;
  std::optional<Pose6D> last_keypose_;
  bool shutdown_ = false;
};

/// Binds a node to a link: sequence numbers, inbound validation, and a
/// backlog that is replayed after a reconnect. Hovers while disconnected.
class NodeRunner {
 public:
  NodeRunner(NavptsNode node, NodeLink& link);

  void start();
  /// Returns the command to apply for the next tick.
  VelocityCommand step(const TickInputs& inputs);
  void finish();

  NavptsNode& node() { return node_; }
  const NavptsNode& node() const { return node_; }
  int rejected_updates() const { return rejected_updates_; }
  std::size_t backlog() const { return backlog_.size(); }

 private:
  void send(const protocol::Message& msg);
  void flush_backlog();

  NavptsNode node_;
  NodeLink& link_;
  std::uint64_t seq_ = 0;
  protocol::SequenceGuard guard_;
  std::vector<std::string> backlog_;
  int rejected_updates_ = 0;
};

struct StationConfig {
  DetectionNoiseParams detection;
  int n_fuse = 5;
  BaSchedule ba;
  RefineThresholds refine;
};

struct Outbound {
  std::optional<int> to;  // nullopt broadcasts
  protocol::Message msg;
};

class GroundStation {
 public:
  explicit GroundStation(StationConfig config);

  std::vector<Outbound> handle(const protocol::Envelope& env);
  /// Malformed or out-of-sequence lines are logged and dropped.
  std::vector<Outbound> handle_line(std::string_view line);
  /// Broadcasts a map snapshot when the map changed since the last flush.
  std::vector<Outbound> flush();

  const GlobalMap& map() const { return map_; }
  const PendingObservations& pending() const { return pending_; }
  const FrameHistory& history() const { return history_; }
  const std::vector<Keypose>& keyposes() const { return keyposes_; }
  const std::vector<MergeEvent>& merges() const { return merges_; }
  const std::vector<RefineEvent>& refinements() const { return refinements_; }
  const std::vector<BaEvent>& ba_runs() const { return ba_runs_; }
  int dropped_messages() const { return dropped_; }
  bool all_shut_down() const;
  const std::set<int>& registered() const { return registered_; }
  std::uint64_t next_seq() { return ++seq_; }

 private:
  std::vector<Outbound> on_hello(const protocol::Hello& m);
  std::vector<Outbound> on_marker(const protocol::MarkerObs& m);
  std::vector<Outbound> on_keypose(const protocol::KeyposeCommit& m);
  std::vector<Outbound> merge(FrameId a, FrameId b, double time);
  void run_ba(FrameId frame, const std::string& trigger, double time);
  /// Follows the merge chain from a possibly stale frame; returns the live frame.
  FrameId resolve(FrameId frame, Pose6D& pose, Covariance6* cov = nullptr) const;

  StationConfig config_;
  GlobalMap map_;
  PendingObservations pending_;
  FrameHistory history_;
  std::map<FrameId, std::pair<FrameId, Pose6D>> aliases_;  // loser -> (winner, rt)
  std::map<int, std::vector<CameraParams>> cameras_;
  std::set<int> registered_;
  std::set<int> shut_down_;
  std::vector<Keypose> keyposes_;
  std::map<FrameId, int> new_keyposes_;
  std::vector<MergeEvent> merges_;
  std::vector<RefineEvent> refinements_;
  std::vector<BaEvent> ba_runs_;
  protocol::SequenceGuard guard_;
  std::uint64_t seq_ = 0;
  int dropped_ = 0;
  bool dirty_ = false;
};

enum class RunMode { lockstep, threaded };

RunMode parse_mode(std::string_view name);

/// Sees every line the station receives, before it is handled.
using StationTap = std::function<void(const std::string&)>;

/// Lockstep runs are deterministic for a fixed scenario and seed.
RunReport run_scenario(const Scenario& scenario, std::uint64_t seed, RunMode mode,
                       const StationTap& tap = {});

}  // namespace mss
