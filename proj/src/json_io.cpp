#include "mss/json_io.hpp"

#include <stdexcept>

namespace mss {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& j, Eigen::Index expected_size) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected_size) {
    throw std::invalid_argument("expected array of " + std::to_string(expected_size) + " numbers");
  }
  Eigen::VectorXd v(expected_size);
  for (Eigen::Index i = 0; i < expected_size; ++i) {
    const json& x = j[static_cast<std::size_t>(i)];
    if (!x.is_number()) throw std::invalid_argument("expected a number");
    v[i] = x.get<double>();
  }
  return v;
}

void to_json(json& j, const Pose6D& p) {
  j = json{{"t", vec_to_json(p.translation())}, {"euler", vec_to_json(p.euler())}};
}

void from_json(const json& j, Pose6D& p) {
  const Vec3 t = vec_from_json(j.at("t"), 3);
  const Vec3 e = vec_from_json(j.at("euler"), 3);
  p = Pose6D::from_euler(t, e);
}

json cov_to_json(const Covariance6& c) {
  json a = json::array();
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k) a.push_back(c(r, k));
  return a;
}

Covariance6 cov_from_json(const json& j) {
  const Eigen::VectorXd v = vec_from_json(j, 36);
  Covariance6 c;
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k) c(r, k) = v[r * 6 + k];
  return c;
}

void to_json(json& j, const FrameId& f) { j = f.value; }
void from_json(const json& j, FrameId& f) { f.value = j.get<std::uint32_t>(); }

void to_json(json& j, const Bounds& b) {
  j = json{{"min", vec_to_json(b.min)}, {"max", vec_to_json(b.max)}};
}
void from_json(const json& j, Bounds& b) {
  b.min = vec_from_json(j.at("min"), 3);
  b.max = vec_from_json(j.at("max"), 3);
}

void to_json(json& j, const CameraParams& c) {
  j = json{{"name", c.name},
           {"extrinsics", c.extrinsics},
           {"fov_half_angle", c.fov_half_angle},
           {"max_range", c.max_range}};
}
void from_json(const json& j, CameraParams& c) {
  c.name = j.value("name", std::string{});
  c.extrinsics = j.at("extrinsics").get<Pose6D>();
  c.fov_half_angle = j.at("fov_half_angle").get<double>();
  c.max_range = j.at("max_range").get<double>();
}

void to_json(json& j, const DetectionNoiseParams& n) {
  j = json{{"a_pos", n.a_pos}, {"b_pos", n.b_pos}, {"a_ang", n.a_ang}, {"b_ang", n.b_ang}};
}
void from_json(const json& j, DetectionNoiseParams& n) {
  const DetectionNoiseParams d;
  n.a_pos = j.value("a_pos", d.a_pos);
  n.b_pos = j.value("b_pos", d.b_pos);
  n.a_ang = j.value("a_ang", d.a_ang);
  n.b_ang = j.value("b_ang", d.b_ang);
}

void to_json(json& j, const MarkerDetection& d) {
  j = json{{"drone_id", d.drone_id}, {"marker_id", d.marker_id}, {"camera", d.camera},
           {"rel_pose", d.rel_pose}, {"range", d.range},         {"timestamp", d.timestamp}};
}
void from_json(const json& j, MarkerDetection& d) {
  d.drone_id = j.at("drone_id").get<int>();
  d.marker_id = j.at("marker_id").get<int>();
  d.camera = j.at("camera").get<int>();
  d.rel_pose = j.at("rel_pose").get<Pose6D>();
  d.range = j.at("range").get<double>();
  d.timestamp = j.at("timestamp").get<double>();
}

void to_json(json& j, const EkfState& s) {
  j = json{{"mean", vec_to_json(s.mean)},
           {"cov", cov_to_json(s.cov)},
           {"frame", s.frame},
           {"timestamp", s.timestamp}};
}
void from_json(const json& j, EkfState& s) {
  s.mean = vec_from_json(j.at("mean"), 6);
  s.cov = cov_from_json(j.at("cov"));
  s.frame = j.at("frame").get<FrameId>();
  s.timestamp = j.at("timestamp").get<double>();
}

void to_json(json& j, const MapEntry& e) {
  j = json{{"marker_id", e.marker_id}, {"frame", e.frame},         {"pose", e.pose},
           {"cov", cov_to_json(e.cov)},  {"obs_count", e.obs_count}, {"last_seen", e.last_seen}};
}
void from_json(const json& j, MapEntry& e) {
  e.marker_id = j.at("marker_id").get<int>();
  e.frame = j.at("frame").get<FrameId>();
  e.pose = j.at("pose").get<Pose6D>();
  e.cov = cov_from_json(j.at("cov"));
  e.obs_count = j.at("obs_count").get<int>();
  e.last_seen = j.value("last_seen", 0.0);
}

void to_json(json& j, const KeyposeObservation& o) {
  j = json{{"marker_id", o.marker_id},
           {"camera", o.camera},
           {"rel_pose", o.rel_pose},
           {"cov", cov_to_json(o.noise)}};
}
void from_json(const json& j, KeyposeObservation& o) {
  o.marker_id = j.at("marker_id").get<int>();
  o.camera = j.at("camera").get<int>();
  o.rel_pose = j.at("rel_pose").get<Pose6D>();
  o.noise = cov_from_json(j.at("cov"));
}

void to_json(json& j, const Keypose& k) {
  j = json{{"drone_id", k.drone_id},
           {"frame", k.frame},
           {"pose", k.pose},
           {"timestamp", k.timestamp},
           {"observations", k.observations}};
}
void from_json(const json& j, Keypose& k) {
  k.drone_id = j.at("drone_id").get<int>();
  k.frame = j.at("frame").get<FrameId>();
  k.pose = j.at("pose").get<Pose6D>();
  k.timestamp = j.at("timestamp").get<double>();
  k.observations = j.at("observations").get<std::vector<KeyposeObservation>>();
}

void to_json(json& j, const FrameTransform& t) {
  j = json{{"from", t.from},         {"to", t.to},
           {"rt", t.rt},             {"residual", t.residual},
           {"support", t.support},   {"scale", t.scale},
           {"point_branch", t.point_branch}};
}

void from_json(const json& j, FrameTransform& t) {
  t.from = j.at("from").get<FrameId>();
  t.to = j.at("to").get<FrameId>();
  t.rt = j.at("rt").get<Pose6D>();
  t.residual = j.at("residual").get<double>();
  t.support = j.at("support").get<int>();
  t.scale = j.value("scale", 1.0);
  t.point_branch = j.value("point_branch", false);
}

void to_json(json& j, const BaReport& r) {
  j = json{{"iterations", r.iterations},
           {"initial_cost", r.initial_cost},
           {"final_cost", r.final_cost},
           {"damping_trace", r.damping_trace},
           {"cost_trace", r.cost_trace},
           {"termination", r.termination},
           {"aborted", r.aborted}};
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
}

void from_json(const json& j, BaReport& r) {
  r.iterations = j.at("iterations").get<int>();
  r.initial_cost = j.at("initial_cost").get<double>();
  r.final_cost = j.at("final_cost").get<double>();
  r.damping_trace = j.at("damping_trace").get<std::vector<double>>();
  r.cost_trace = j.at("cost_trace").get<std::vector<double>>();
  r.termination = j.at("termination").get<std::string>();
  r.aborted = j.at("aborted").get<bool>();
  r.diagnostic = j.value("diagnostic", std::string());
}

}  // namespace mss
