#pragma once

#include "json.hpp"

#include "mss/ba.hpp"
#include "mss/ekf.hpp"
#include "mss/geom.hpp"
#include "mss/mapstore.hpp"
#include "mss/merge.hpp"
#include "mss/worldsim.hpp"

// Serialization shared by every file and wire payload. Poses are written as
// {"t": [x, y, z], "euler": [alpha, beta, gamma]}; covariances as 36 row-major numbers.
namespace mss {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vec_from_json(const json& j, Eigen::Index expected_size);

void to_json(json& j, const Pose6D& p);
void from_json(const json& j, Pose6D& p);

json cov_to_json(const Covariance6& c);
Covariance6 cov_from_json(const json& j);

void to_json(json& j, const FrameId& f);
void from_json(const json& j, FrameId& f);

void to_json(json& j, const Bounds& b);
void from_json(const json& j, Bounds& b);

void to_json(json& j, const CameraParams& c);
void from_json(const json& j, CameraParams& c);

void to_json(json& j, const DetectionNoiseParams& n);
void from_json(const json& j, DetectionNoiseParams& n);

void to_json(json& j, const MarkerDetection& d);
void from_json(const json& j, MarkerDetection& d);

void to_json(json& j, const EkfState& s);
void from_json(const json& j, EkfState& s);

void to_json(json& j, const MapEntry& e);
void from_json(const json& j, MapEntry& e);

void to_json(json& j, const KeyposeObservation& o);
void from_json(const json& j, KeyposeObservation& o);

void to_json(json& j, const Keypose& k);
void from_json(const json& j, Keypose& k);

void to_json(json& j, const FrameTransform& t);
void from_json(const json& j, FrameTransform& t);

void to_json(json& j, const BaReport& r);
void from_json(const json& j, BaReport& r);

}  // namespace mss
