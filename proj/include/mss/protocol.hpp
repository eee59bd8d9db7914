#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mss/ba.hpp"
#include "mss/ekf.hpp"
#include "mss/mapstore.hpp"
#include "mss/worldsim.hpp"

// Wire protocol between Navpts nodes and the ground station: one JSON object
// per line, {"type": ..., "seq": ..., <fields>}.
namespace mss::protocol {

struct Hello {
  int drone_id = 0;
  Pose6D start_pose;
  std::vector<CameraParams> cameras;
};

struct MarkerObs {
  int drone_id = 0;
  FrameId frame;  // frame of ekf_pose as known to the sender
  MarkerDetection detection;
  Pose6D ekf_pose;
  Covariance6 ekf_cov = Covariance6::Zero();
  double timestamp = 0.0;
};

struct PoseReport {
  int drone_id = 0;
  EkfState ekf_state;
};

struct MapSnapshot {
  std::vector<MapEntry> entries;
};

struct FrameMerged {
  FrameId loser;
  FrameId winner;
  Pose6D rt;  // loser coordinates -> winner coordinates
};

struct KeyposeCommit {
  Keypose keypose;
};

struct Shutdown {
  std::optional<int> drone_id;  // absent when sent by the station
};

using Message =
    std::variant<Hello, MarkerObs, PoseReport, MapSnapshot, FrameMerged, KeyposeCommit, Shutdown>;

struct Envelope {
  std::uint64_t seq = 0;
  Message msg;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One line of UTF-8 JSON without the trailing newline.
std::string encode(const Envelope& env);
/// Throws ProtocolError on malformed input.
Envelope decode(std::string_view line);

std::string_view type_name(const Message& msg);
/// Drone id of the sender, or nullopt for station-originated messages.
std::optional<int> sender_of(const Message& msg);

/// Rejects sequence regressions (and replays) per sender.
class SequenceGuard {
 public:
  /// Sender key -1 denotes the station.
  bool accept(int sender, std::uint64_t seq);

 private:
  std::map<int, std::uint64_t> last_;
};

}  // namespace mss::protocol
