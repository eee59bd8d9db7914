#include "mss/swarm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

namespace mss {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::size_t kMaxBacklog = 10000;

FrameId own_frame(int drone_id) { return FrameId{static_cast<std::uint32_t>(drone_id)}; }

}  // namespace

SweepPolicy::SweepPolicy(const Bounds& region, double altitude, const PolicyParams& params)
    : params_(params) {
  const int nx = params.grid_x;
  const int ny = params.grid_y;
  const double wx = (region.max.x() - region.min.x()) / nx;
  const double wy = (region.max.y() - region.min.y()) / ny;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      centers_.emplace_back(region.min.x() + (ix + 0.5) * wx, region.min.y() + (iy + 0.5) * wy,
                            altitude);
    }
  }
  visited_.assign(centers_.size(), false);
}

void SweepPolicy::transform(const Pose6D& rt) {
  for (auto& c : centers_) c = rt * c;
}

void SweepPolicy::mark_visited(const Vec3& p) {
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    if ((centers_[i] - p).norm() <= params_.r_visit) visited_[i] = true;
  }
}

VelocityCommand SweepPolicy::choose_destination(const Pose6D& estimate) {
  const Vec3 p = estimate.translation();
  mark_visited(p);
  if (std::all_of(visited_.begin(), visited_.end(), [](bool v) { return v; })) {
    visited_.assign(centers_.size(), false);
    ++sweeps_;
    if (centers_.size() > 1) mark_visited(p);
  }

  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    if (visited_[i]) continue;
    const double d = (centers_[i] - p).head<2>().norm();
    if (!best || d < best_d - 1e-9) {
      best = i;
      best_d = d;
    }
  }
  target_ = best;

  VelocityCommand cmd;
  cmd.yaw_rate = params_.yaw_rate;
  if (!best) return cmd;
  Vec3 v = params_.gain * (centers_[*best] - p);
  const double speed = v.norm();
  if (speed > params_.max_speed) v *= params_.max_speed / speed;
  cmd.body_velocity = estimate.rotation_matrix().transpose() * v;
  return cmd;
}

NavptsNode::NavptsNode(NodeConfig config, SweepPolicy policy, const Pose6D& start_pose)
    : config_(std::move(config)), policy_(std::move(policy)), start_pose_(start_pose) {
  state_.frame = own_frame(config_.drone_id);
}

protocol::Message NavptsNode::hello() const {
  return protocol::Hello{config_.drone_id, start_pose_, config_.cameras};
}

TickResult NavptsNode::tick(const TickInputs& inputs, std::span<const protocol::Message> inbound) {
  TickResult out;

  state_ = predict(state_, inputs.odometry, config_.ekf);
  state_.timestamp = inputs.time;

  for (const auto& det : inputs.detections) {
    if (det.camera < 0 || det.camera >= static_cast<int>(config_.cameras.size())) continue;
    auto it = view_.find(det.marker_id);
    const bool usable = it != view_.end() && it->second.frame == state_.frame &&
                        it->second.obs_count >= config_.n_fuse;
    if (usable) {
      const auto obs = observation_from_marker(det, it->second, config_.cameras[det.camera],
                                               config_.ekf.detection, state_.frame);
      const auto r = update(state_, obs, config_.ekf);
      if (r.accepted) {
        state_ = r.state;
        ++out.ekf_updates;
      } else {
        ++out.rejected_updates;
        spdlog::debug("drone {} gated marker {} (d2 = {:.3f})", config_.drone_id, det.marker_id,
                      r.mahalanobis2);
      }
    } else {
      out.outbound.push_back(protocol::MarkerObs{config_.drone_id, state_.frame, det,
                                                 state_.pose(), state_.cov, inputs.time});
    }
  }

  if (select_keypose(state_.pose(), last_keypose_, !inputs.detections.empty(), config_.keypose)) {
    Keypose kp{config_.drone_id, state_.frame, state_.pose(), inputs.time, {}};
    for (const auto& det : inputs.detections) {
      if (det.camera < 0 || det.camera >= static_cast<int>(config_.cameras.size())) continue;
      kp.observations.push_back({det.marker_id, det.camera, config_.cameras[det.camera].extrinsics,
                                 det.rel_pose, detection_noise(det, config_.ekf.detection)});
    }
    last_keypose_ = kp.pose;
    out.outbound.push_back(protocol::KeyposeCommit{std::move(kp)});
  }
  out.outbound.push_back(protocol::PoseReport{config_.drone_id, state_});

  for (const auto& msg : inbound) apply_inbound(msg);

  out.command = policy_.choose_destination(state_.pose());
  return out;
}

void NavptsNode::apply_inbound(const protocol::Message& msg) {
  std::visit(overloaded{
                 [&](const protocol::FrameMerged& m) {
                   if (m.loser != state_.frame) return;
                   state_ = transform_state(state_, m.rt, m.winner);
                   policy_.transform(m.rt);
                   if (last_keypose_) last_keypose_ = m.rt * *last_keypose_;
                   spdlog::debug("drone {} moved to frame {}", config_.drone_id, m.winner.value);
                 },
                 [&](const protocol::MapSnapshot& m) {
                   view_.clear();
                   for (const auto& e : m.entries) view_[e.marker_id] = e;
                 },
                 [&](const protocol::Shutdown& m) {
                   if (!m.drone_id) shutdown_ = true;
                 },
                 [](const auto&) {},
             },
             msg);
}

NodeRunner::NodeRunner(NavptsNode node, NodeLink& link) : node_(std::move(node)), link_(link) {}

void NodeRunner::start() { send(node_.hello()); }

void NodeRunner::send(const protocol::Message& msg) {
  std::string line = protocol::encode({++seq_, msg});
  if (link_.connected()) {
    flush_backlog();
    if (backlog_.empty() && link_.send_line(line)) return;
  }
  if (backlog_.size() >= kMaxBacklog) {
    spdlog::warn("drone {} backlog full, dropping oldest message", node_.drone_id());
    backlog_.erase(backlog_.begin());
  }
  backlog_.push_back(std::move(line));
}

void NodeRunner::flush_backlog() {
  std::size_t sent = 0;
  while (sent < backlog_.size() && link_.send_line(backlog_[sent])) ++sent;
  backlog_.erase(backlog_.begin(), backlog_.begin() + static_cast<std::ptrdiff_t>(sent));
}

VelocityCommand NodeRunner::step(const TickInputs& inputs) {
  bool connected = link_.connected();
  if (!connected && link_.reconnect()) {
    spdlog::info("drone {} reconnected, replaying {} messages", node_.drone_id(), backlog_.size());
    connected = true;
    flush_backlog();
  }

  std::vector<protocol::Message> inbound;
  if (connected) {
    while (auto line = link_.poll_line()) {
      try {
        auto env = protocol::decode(*line);
        if (!guard_.accept(-1, env.seq)) {
          spdlog::warn("drone {} dropped out-of-sequence station message", node_.drone_id());
          continue;
        }
        inbound.push_back(std::move(env.msg));
      } catch (const protocol::ProtocolError& e) {
        spdlog::warn("drone {} dropped malformed line: {}", node_.drone_id(), e.what());
      }
    }
  }

  TickResult r = node_.tick(inputs, inbound);
  rejected_updates_ += r.rejected_updates;
  for (const auto& msg : r.outbound) send(msg);
  return link_.connected() ? r.command : VelocityCommand::hover();
}

void NodeRunner::finish() { send(protocol::Shutdown{node_.drone_id()}); }

GroundStation::GroundStation(StationConfig config)
    : config_(std::move(config)), map_(config_.n_fuse) {}

bool GroundStation::all_shut_down() const {
  return !registered_.empty() &&
         std::includes(shut_down_.begin(), shut_down_.end(), registered_.begin(), registered_.end());
}

FrameId GroundStation::resolve(FrameId frame, Pose6D& pose, Covariance6* cov) const {
  for (auto it = aliases_.find(frame); it != aliases_.end(); it = aliases_.find(frame)) {
    const auto& [winner, rt] = it->second;
    pose = rt * pose;
    if (cov) *cov = transport_covariance(*cov, rt.rotation_matrix());
    frame = winner;
  }
  return frame;
}

std::vector<Outbound> GroundStation::handle_line(std::string_view line) {
  try {
    return handle(protocol::decode(line));
  } catch (const protocol::ProtocolError& e) {
    ++dropped_;
    spdlog::warn("station dropped malformed line: {}", e.what());
    return {};
  }
}

std::vector<Outbound> GroundStation::handle(const protocol::Envelope& env) {
  const int sender = protocol::sender_of(env.msg).value_or(-1);
  if (sender < 0) {
    ++dropped_;
    spdlog::warn("station dropped {} without a drone sender", protocol::type_name(env.msg));
    return {};
  }
  if (!guard_.accept(sender, env.seq)) {
    ++dropped_;
    spdlog::warn("station dropped out-of-sequence {} from drone {} (seq {})",
                 protocol::type_name(env.msg), sender, env.seq);
    return {};
  }
  if (!std::holds_alternative<protocol::Hello>(env.msg) && !registered_.count(sender)) {
    ++dropped_;
    spdlog::warn("station dropped {} from unregistered drone {}", protocol::type_name(env.msg),
                 sender);
    return {};
  }
  return std::visit(overloaded{
                        [&](const protocol::Hello& m) { return on_hello(m); },
                        [&](const protocol::MarkerObs& m) { return on_marker(m); },
                        [&](const protocol::KeyposeCommit& m) { return on_keypose(m); },
                        [&](const protocol::Shutdown& m) {
                          shut_down_.insert(*m.drone_id);
                          return std::vector<Outbound>{};
                        },
                        [](const auto&) { return std::vector<Outbound>{}; },
                    },
                    env.msg);
}

std::vector<Outbound> GroundStation::on_hello(const protocol::Hello& m) {
  cameras_[m.drone_id] = m.cameras;
  if (!registered_.insert(m.drone_id).second) return {};
  const FrameId f = own_frame(m.drone_id);
  if (!map_.has_frame(f) && !aliases_.count(f)) map_.add_frame(f);
  Pose6D unused;
  map_.assign_drone(m.drone_id, resolve(f, unused));
  dirty_ = true;
  spdlog::info("station registered drone {}", m.drone_id);
  return {};
}

std::vector<Outbound> GroundStation::on_marker(const protocol::MarkerObs& m) {
  const auto& cams = cameras_.at(m.drone_id);
  const auto& det = m.detection;
  if (det.camera < 0 || det.camera >= static_cast<int>(cams.size())) {
    ++dropped_;
    spdlog::warn("station dropped observation with unknown camera {}", det.camera);
    return {};
  }
  Pose6D drone_pose = m.ekf_pose;
  Covariance6 cov = m.ekf_cov;
  const FrameId frame = resolve(m.frame, drone_pose, &cov);
  if (!map_.has_frame(frame)) {
    ++dropped_;
    spdlog::warn("station dropped observation in unknown frame {}", m.frame.value);
    return {};
  }
  const Pose6D marker = drone_pose * cams[det.camera].extrinsics * det.rel_pose;
  const Covariance6 marker_cov =
      cov + transport_covariance(detection_noise(det, config_.detection),
                                 drone_pose.rotation_matrix());

  const auto entry = map_.lookup(det.marker_id);
  if (!entry) {
    map_.insert_marker(frame, det.marker_id, marker, marker_cov, m.timestamp);
    dirty_ = true;
    return {};
  }
  if (entry->frame == frame) {
    if (map_.fuse_observation(det.marker_id, marker, marker_cov, m.timestamp)) dirty_ = true;
    return {};
  }
  pending_.add(frame, det.marker_id, marker, marker_cov, m.timestamp);
  return merge(entry->frame, frame, m.timestamp);
}

std::vector<Outbound> GroundStation::merge(FrameId a, FrameId b, double time) {
  std::vector<PosePair> pairs;
  std::vector<int> ids;
  for (int id : find_matches(map_, a, b, pending_)) {
    pairs.push_back({map_.lookup(id)->pose, pending_.find(b, id)->pose});
    ids.push_back(id);
  }
  for (int id : find_matches(map_, b, a, pending_)) {
    pairs.push_back({pending_.find(a, id)->pose, map_.lookup(id)->pose});
    ids.push_back(id);
  }
  if (pairs.empty()) return {};

  FrameTransform ft = estimate_transform(pairs);  // a ≈ rt ∘ b
  const FrameId winner = std::min(a, b);
  const FrameId loser = std::max(a, b);
  if (winner != a) {
    for (auto& p : pairs) std::swap(p.in_a, p.in_b);
    ft.rt = ft.rt.inverse();
    ft.residual = transform_residual(ft.rt, pairs);
  }
  ft.from = loser;
  ft.to = winner;

  MergeRecord rec;
  rec.winner = winner;
  rec.loser = loser;
  rec.applied = ft.rt;
  rec.current_frame = winner;
  rec.time = time;
  rec.matched_ids = ids;
  rec.pairs = pairs;
  for (int d : map_.drones_in(winner)) rec.winner_drones.insert(d);
  for (int d : map_.drones_in(loser)) rec.loser_drones.insert(d);
  for (const auto& e : map_.entries_in(winner)) rec.winner_markers.insert(e.marker_id);
  for (const auto& e : map_.entries_in(loser)) rec.loser_markers.insert(e.marker_id);
  history_.on_merge(winner, loser, ft.rt);
  history_.add(std::move(rec));

  const MergeNotice notice = merge_frames(map_, winner, loser, ft, pending_);
  for (auto& kp : keyposes_) {
    if (kp.frame != loser) continue;
    kp.pose = ft.rt * kp.pose;
    kp.frame = winner;
  }
  new_keyposes_[winner] += new_keyposes_[loser];
  new_keyposes_.erase(loser);
  aliases_[loser] = {winner, ft.rt};
  merges_.push_back({time, ft, ids, notice.reassigned_drones, notice.moved_markers});
  dirty_ = true;
  spdlog::info("merged frame {} into {} on {} match(es), residual {:.4f} m", loser.value,
               winner.value, ids.size(), ft.residual);

  std::vector<Outbound> out{{std::nullopt, protocol::FrameMerged{loser, winner, ft.rt}}};
  if (config_.ba.enabled) run_ba(winner, "merge", time);
  return out;
}

std::vector<Outbound> GroundStation::on_keypose(const protocol::KeyposeCommit& m) {
  Keypose kp = m.keypose;
  kp.frame = resolve(kp.frame, kp.pose);
  if (!map_.has_frame(kp.frame)) {
    ++dropped_;
    return {};
  }
  const auto& cams = cameras_.at(kp.drone_id);
  std::erase_if(kp.observations, [&](const KeyposeObservation& o) {
    return o.camera < 0 || o.camera >= static_cast<int>(cams.size());
  });
  for (auto& o : kp.observations) o.extrinsics = cams[o.camera].extrinsics;

  for (const auto& o : kp.observations) {
    const auto entry = map_.lookup(o.marker_id);
    if (!entry || entry->frame != kp.frame) continue;
    const Pose6D observed = kp.pose * o.extrinsics * o.rel_pose;
    auto corr = refine_transform(map_, history_, {o.marker_id, kp.drone_id, kp.frame, observed},
                                 config_.refine);
    if (!corr) continue;
    const auto& rec = history_.records()[corr->record];
    for (auto& other : keyposes_) {
      if (other.frame == kp.frame && rec.loser_drones.count(other.drone_id) &&
          other.timestamp <= rec.time) {
        other.pose = corr->delta * other.pose;
      }
    }
    refinements_.push_back({kp.timestamp, rec.winner, rec.loser, corr->delta,
                            corr->residual_before, corr->residual_after, corr->refined.support,
                            corr->moved_markers});
    dirty_ = true;
    spdlog::info("refined merge {} <- {}: residual {:.4f} -> {:.4f} m", rec.winner.value,
                 rec.loser.value, corr->residual_before, corr->residual_after);
  }

  const FrameId frame = kp.frame;
  const double time = kp.timestamp;
  keyposes_.push_back(std::move(kp));
  if (config_.ba.enabled && ++new_keyposes_[frame] >= config_.ba.every_keyposes) {
    new_keyposes_[frame] = 0;
    run_ba(frame, "keyposes", time);
  }
  return {};
}

void GroundStation::run_ba(FrameId frame, const std::string& trigger, double time) {
  BaProblem problem;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < keyposes_.size(); ++i) {
    if (keyposes_[i].frame != frame) continue;
    Keypose kp = keyposes_[i];
    std::erase_if(kp.observations, [&](const KeyposeObservation& o) {
      const auto e = map_.lookup(o.marker_id);
      return !e || e->frame != frame;
    });
    if (kp.observations.empty()) continue;
    for (const auto& o : kp.observations) problem.markers[o.marker_id] = map_.lookup(o.marker_id)->pose;
    problem.keyposes.push_back(std::move(kp));
    index.push_back(i);
  }
  if (problem.keyposes.empty()) return;
  for (std::size_t k = 0; k < problem.keyposes.size(); ++k) {
    if (problem.keyposes[k].drone_id < problem.keyposes[problem.anchor].drone_id) problem.anchor = k;
  }
  if (problem.num_variables() == 0) return;

  BaResult result = optimize(problem, config_.ba.config);
  if (!result.report.aborted) {
    for (std::size_t k = 0; k < index.size(); ++k) {
      keyposes_[index[k]].pose = result.problem.keyposes[k].pose;
    }
    for (const auto& [id, pose] : result.problem.markers) {
      MapEntry e = *map_.lookup(id);
      e.pose = pose;
      map_.replace_entry(e);
    }
    dirty_ = true;
  } else {
    spdlog::warn("bundle adjustment on frame {} aborted: {}", frame.value,
                 result.report.diagnostic);
  }
  spdlog::debug("bundle adjustment on frame {}: {} keyposes, cost {:.4g} -> {:.4g} in {} iterations",
                frame.value, problem.keyposes.size(), result.report.initial_cost,
                result.report.final_cost, result.report.iterations);
  ba_runs_.push_back({time, frame, trigger, static_cast<int>(problem.keyposes.size()),
                      static_cast<int>(problem.markers.size()), std::move(result.report)});
}

std::vector<Outbound> GroundStation::flush() {
  if (!dirty_) return {};
  dirty_ = false;
  protocol::MapSnapshot snap;
  for (const auto& [id, e] : map_.entries()) snap.entries.push_back(e);
  return {{std::nullopt, std::move(snap)}};
}

RunMode parse_mode(std::string_view name) {
  if (name == "lockstep") return RunMode::lockstep;
  if (name == "threaded") return RunMode::threaded;
  throw std::invalid_argument("unknown run mode: " + std::string(name));
}

namespace {

void route(GroundStation& gs, StationLink& link, const std::vector<Outbound>& out) {
  for (const auto& o : out) {
    const std::string line = protocol::encode({gs.next_seq(), o.msg});
    if (o.to) {
      link.send_to(*o.to, line);
    } else {
      link.broadcast(line);
    }
  }
}

/// Handles everything queued at the station, then flushes the map.
void pump(GroundStation& gs, StationLink& link, const StationTap& tap) {
  while (auto line = link.try_next_line()) {
    if (tap) tap(*line);
    route(gs, link, gs.handle_line(*line));
  }
  route(gs, link, gs.flush());
}

struct DroneRun {
  const DroneSpec* spec = nullptr;
  DroneTruth truth;
  Rng rng;
  VelocityCommand cmd;
  std::unique_ptr<NodeLink> link;
  std::unique_ptr<NodeRunner> runner;
  std::vector<TrajectorySample> samples;
};

NavptsNode make_node(const Scenario& s, const DroneSpec& d) {
  SweepPolicy policy(d.region, d.altitude, s.policy);
  policy.transform(d.start_pose.inverse());
  return NavptsNode(NodeConfig{d.id, d.cameras, s.filter, s.keypose, s.n_fuse}, std::move(policy),
                    d.start_pose);
}

void advance(const Scenario& s, DroneRun& r, int tick) {
  const double dt = s.dt();
  const double t = tick * dt;
  const DroneTruth prev = r.truth;
  r.truth = step_drone(prev, r.cmd, dt, s.world.bounds);
  TickInputs in;
  in.time = t;
  in.odometry = sense_odometry(prev, r.truth, dt, t, s.sensor_noise, r.rng);
  in.detections = sense_markers(r.truth, s.world, r.spec->cameras, s.sensor_noise, t, r.rng);
  r.cmd = r.runner->step(in);
  const NavptsNode& node = r.runner->node();
  r.samples.push_back({tick, t, r.spec->id, node.frame(), r.truth.pose, node.state().pose()});
}

}  // namespace

RunReport run_scenario(const Scenario& s, std::uint64_t seed, RunMode mode,
                       const StationTap& tap) {
  validate_scenario(s);
  GroundStation gs(StationConfig{s.filter.detection, s.n_fuse, s.ba, s.refine});

  std::vector<const DroneSpec*> specs;
  for (const auto& d : s.drones) specs.push_back(&d);
  std::sort(specs.begin(), specs.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::unique_ptr<StationLink> station;
  std::uint16_t port = 0;
  if (mode == RunMode::threaded && s.threaded.transport == "tcp") {
    auto tcp = std::make_unique<TcpStation>(s.threaded.port);
    port = tcp->port();
    station = std::move(tcp);
  } else {
    station = std::make_unique<InProcessHub>();
  }

  std::vector<DroneRun> drones(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto& r = drones[i];
    r.spec = specs[i];
    r.truth = DroneTruth{specs[i]->id, specs[i]->start_pose, Vec3::Zero(), 0.0};
    r.rng = make_drone_rng(seed, specs[i]->id);
    if (port != 0) {
      r.link = std::make_unique<TcpNodeLink>("127.0.0.1", port);
    } else {
      r.link = static_cast<InProcessHub&>(*station).connect(specs[i]->id);
    }
    r.runner = std::make_unique<NodeRunner>(make_node(s, *specs[i]), *r.link);
    r.samples.reserve(static_cast<std::size_t>(s.num_ticks()));
  }

  const int ticks = s.num_ticks();
  if (mode == RunMode::lockstep) {
    for (auto& r : drones) r.runner->start();
    pump(gs, *station, tap);
    for (int k = 1; k <= ticks; ++k) {
      for (auto& r : drones) advance(s, r, k);
      pump(gs, *station, tap);
    }
    for (auto& r : drones) r.runner->finish();
    pump(gs, *station, tap);
  } else {
    std::atomic<bool> drones_done{false};
    std::thread station_thread([&] {
      auto idle_since = std::chrono::steady_clock::now();
      while (true) {
        if (auto line = station->next_line(std::chrono::milliseconds(20))) {
          if (tap) tap(*line);
          route(gs, *station, gs.handle_line(*line));
          pump(gs, *station, tap);
          idle_since = std::chrono::steady_clock::now();
        }
        if (gs.all_shut_down() && gs.registered().size() == drones.size()) break;
        if (drones_done && std::chrono::steady_clock::now() - idle_since > std::chrono::seconds(5)) {
          spdlog::warn("station stopped waiting for shutdown messages");
          break;
        }
      }
      pump(gs, *station, tap);
    });
    std::vector<std::thread> workers;
    for (auto& r : drones) {
      workers.emplace_back([&s, &r, ticks] {
        r.runner->start();
        const auto period = std::chrono::microseconds(s.threaded.tick_period_us);
        for (int k = 1; k <= ticks; ++k) {
          advance(s, r, k);
          std::this_thread::sleep_for(period);
        }
        r.runner->finish();
      });
    }
    for (auto& w : workers) w.join();
    drones_done = true;
    station_thread.join();
  }

  RunReport report;
  report.scenario_name = s.name;
  report.scenario_digest = scenario_digest(s);
  report.seed = seed;
  report.mode = mode == RunMode::lockstep ? "lockstep" : "threaded";
  report.tick_rate = s.tick_rate;
  report.ticks = ticks;
  for (const auto* d : specs) report.drone_ids.push_back(d->id);
  report.truth_markers = s.world.markers;
  std::sort(report.truth_markers.begin(), report.truth_markers.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& [id, e] : gs.map().entries()) report.final_map.push_back(e);
  report.frames.assign(gs.map().frames().begin(), gs.map().frames().end());
  for (int k = 0; k < ticks; ++k) {
    for (auto& r : drones) {
      if (k < static_cast<int>(r.samples.size())) report.trajectories.push_back(r.samples[k]);
    }
  }
  report.merges = gs.merges();
  report.refinements = gs.refinements();
  report.ba_runs = gs.ba_runs();
  for (auto& r : drones) report.rejected_updates += r.runner->rejected_updates();
  report.dropped_messages = gs.dropped_messages();
  return report;
}

}  // namespace mss
