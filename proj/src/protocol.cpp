#include "mss/protocol.hpp"

#include "mss/json_io.hpp"

namespace mss::protocol {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json body_of(const Message& msg) {
  return std::visit(
      overloaded{
          [](const Hello& m) {
            return json{{"drone_id", m.drone_id}, {"start_pose", m.start_pose},
                        {"cameras", m.cameras}};
          },
          [](const MarkerObs& m) {
            return json{{"drone_id", m.drone_id},   {"frame", m.frame},
                        {"detection", m.detection}, {"ekf_pose", m.ekf_pose},
                        {"ekf_cov", cov_to_json(m.ekf_cov)}, {"timestamp", m.timestamp}};
          },
          [](const PoseReport& m) {
            return json{{"drone_id", m.drone_id}, {"ekf_state", m.ekf_state}};
          },
          [](const MapSnapshot& m) { return json{{"entries", m.entries}}; },
          [](const FrameMerged& m) {
            return json{{"loser", m.loser}, {"winner", m.winner}, {"rt", m.rt}};
          },
          [](const KeyposeCommit& m) { return json{{"keypose", m.keypose}}; },
          [](const Shutdown& m) {
            json j = json::object();
            if (m.drone_id) j["drone_id"] = *m.drone_id;
            return j;
          },
      },
      msg);
}

Message message_from(const std::string& type, const json& j) {
  if (type == "Hello") {
    Hello m;
    m.drone_id = j.at("drone_id").get<int>();
    m.start_pose = j.at("start_pose").get<Pose6D>();
    m.cameras = j.value("cameras", std::vector<CameraParams>{});
    return m;
  }
  if (type == "MarkerObs") {
    MarkerObs m;
    m.drone_id = j.at("drone_id").get<int>();
    m.frame = j.at("frame").get<FrameId>();
    m.detection = j.at("detection").get<MarkerDetection>();
    m.ekf_pose = j.at("ekf_pose").get<Pose6D>();
    m.ekf_cov = cov_from_json(j.at("ekf_cov"));
    m.timestamp = j.at("timestamp").get<double>();
    return m;
  }
  if (type == "PoseReport") {
    return PoseReport{j.at("drone_id").get<int>(), j.at("ekf_state").get<EkfState>()};
  }
  if (type == "MapSnapshot") return MapSnapshot{j.at("entries").get<std::vector<MapEntry>>()};
  if (type == "FrameMerged") {
    return FrameMerged{j.at("loser").get<FrameId>(), j.at("winner").get<FrameId>(),
                       j.at("rt").get<Pose6D>()};
  }
  if (type == "KeyposeCommit") return KeyposeCommit{j.at("keypose").get<Keypose>()};
  if (type == "Shutdown") {
    Shutdown m;
    if (j.contains("drone_id")) m.drone_id = j.at("drone_id").get<int>();
    return m;
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

}  // namespace

std::string encode(const Envelope& env) {
  json j = body_of(env.msg);
  j["type"] = std::string(type_name(env.msg));
  j["seq"] = env.seq;
  return j.dump();
}

Envelope decode(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("not a JSON object");
  try {
    Envelope env;
    if (!j.at("seq").is_number_unsigned()) throw ProtocolError("seq must be a non-negative integer");
    env.seq = j.at("seq").get<std::uint64_t>();
    env.msg = message_from(j.at("type").get<std::string>(), j);
    return env;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
}

std::string_view type_name(const Message& msg) {
  static constexpr std::string_view names[] = {"Hello",       "MarkerObs",     "PoseReport",
                                               "MapSnapshot", "FrameMerged",   "KeyposeCommit",
                                               "Shutdown"};
  return names[msg.index()];
}

std::optional<int> sender_of(const Message& msg) {
  return std::visit(
      overloaded{
          [](const Hello& m) -> std::optional<int> { return m.drone_id; },
          [](const MarkerObs& m) -> std::optional<int> { return m.drone_id; },
          [](const PoseReport& m) -> std::optional<int> { return m.drone_id; },
          [](const KeyposeCommit& m) -> std::optional<int> { return m.keypose.drone_id; },
          [](const Shutdown& m) -> std::optional<int> { return m.drone_id; },
          [](const auto&) -> std::optional<int> { return std::nullopt; },
      },
      msg);
}

bool SequenceGuard::accept(int sender, std::uint64_t seq) {
  auto it = last_.find(sender);
  if (it != last_.end() && seq <= it->second) return false;
  last_[sender] = seq;
  return true;
}

}  // namespace mss::protocol
