#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

#include "mss/merge.hpp"
#include "oracles.hpp"

using namespace mss;

namespace {

Covariance6 iso(double v) { return Covariance6::Identity() * v; }

double pose_error(const Pose6D& a, const Pose6D& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

std::vector<PosePair> synthesize(oracle::RandomPoses& r, const Pose6D& t, int n) {
  std::vector<PosePair> pairs;
  for (int i = 0; i < n; ++i) {
    const Pose6D b = r.pose();
    pairs.push_back({t * b, b});
  }
  return pairs;
}

}  // namespace

TEST(Merge, FindMatchesCases) {
  GlobalMap map;
  map.add_frame(FrameId{0});
  map.add_frame(FrameId{1});
  PendingObservations pending;
  for (int id : {1, 3, 9, 14, 20}) map.insert_marker(FrameId{0}, id, Pose6D(), iso(1), 0);
  for (int id : {30, 31}) map.insert_marker(FrameId{1}, id, Pose6D(), iso(1), 0);
  EXPECT_TRUE(find_matches(map, FrameId{0}, FrameId{1}, pending).empty());
  pending.add(FrameId{1}, 9, Pose6D(), iso(1), 0);
  EXPECT_EQ(find_matches(map, FrameId{0}, FrameId{1}, pending), std::vector<int>{9});
  pending.add(FrameId{1}, 14, Pose6D(), iso(1), 0);
  pending.add(FrameId{1}, 3, Pose6D(), iso(1), 0);
  pending.add(FrameId{0}, 30, Pose6D(), iso(1), 0);
  EXPECT_EQ(find_matches(map, FrameId{0}, FrameId{1}, pending), (std::vector<int>{3, 9, 14}));
  EXPECT_EQ(find_matches(map, FrameId{1}, FrameId{0}, pending), std::vector<int>{30});
  EXPECT_THROW(find_matches(map, FrameId{0}, FrameId{0}, pending), std::logic_error);
}

TEST(Merge, PendingAddFusesRepeats) {
  PendingObservations pending;
  pending.add(FrameId{1}, 4, Pose6D(Vec3(0, 0, 0), Quat::Identity()), iso(1), 0);
  pending.add(FrameId{1}, 4, Pose6D(Vec3(1, 0, 0), Quat::Identity()), iso(1), 1);
  const auto p = pending.find(FrameId{1}, 4);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->count, 2);
  EXPECT_NEAR(p->pose.translation().x(), 0.5, 1e-15);
  EXPECT_EQ(pending.size(), 1u);
}

TEST(Merge, RecoversRandomTransformsAtEverySupport) {
  oracle::RandomPoses r(41);
  for (int support : {1, 2, 3, 10}) {
    for (int i = 0; i < 100; ++i) {
      const Pose6D t = r.pose();
      const auto pairs = synthesize(r, t, support);
      const auto ft = estimate_transform(pairs);
      ASSERT_LT(pose_error(ft.rt, t), 1e-9) << "support " << support;
      ASSERT_LT(ft.residual, 1e-9);
      EXPECT_EQ(ft.support, support);
      EXPECT_EQ(ft.point_branch, support >= 3);
    }
  }
}

TEST(Merge, CollinearTriplesUseOrientationBranch) {
  oracle::RandomPoses r(42);
  for (int i = 0; i < 100; ++i) {
    const Pose6D t = r.pose();
    const Vec3 origin(r.uniform(-2, 2), r.uniform(-2, 2), r.uniform(-2, 2));
    const Vec3 dir = Vec3(r.normal(1), r.normal(1), r.normal(1)).normalized();
    std::vector<PosePair> pairs;
    for (double s : {0.0, 1.0, 2.5}) {
      const Pose6D b = Pose6D::from_euler(origin + s * dir, r.vector().tail<3>());
      pairs.push_back({t * b, b});
    }
    const auto ft = estimate_transform(pairs);
    EXPECT_FALSE(ft.point_branch);
    ASSERT_LT(pose_error(ft.rt, t), 1e-9);
  }
}

TEST(Merge, SinglePairClosedForm) {
  const Pose6D b = Pose6D::from_euler(Vec3(1, 2, 0), Vec3(0.1, 0.2, 0.3));
  const Pose6D a = Pose6D::from_euler(Vec3(-3, 0.5, 1), Vec3(-0.4, 0.0, 2.0));
  const PosePair pair{a, b};
  const auto ft = estimate_transform(std::span(&pair, 1));
  EXPECT_LT(pose_error(ft.rt, a * b.inverse()), 1e-12);
}

TEST(Merge, IdentityRelatedFrames) {
  oracle::RandomPoses r(43);
  for (int n : {1, 4}) {
    const auto pairs = synthesize(r, Pose6D(), n);
    const auto ft = estimate_transform(pairs);
    EXPECT_LT(pose_error(ft.rt, Pose6D()), 1e-12);
    EXPECT_LT(ft.residual, 1e-12);
  }
}

TEST(Merge, RejectsDegenerateInput) {
  std::vector<PosePair> none;
  EXPECT_THROW(estimate_transform(none), std::invalid_argument);
  std::vector<PosePair> bad{{Pose6D(Vec3(NAN, 0, 0), Quat::Identity()), Pose6D()}};
  EXPECT_THROW(estimate_transform(bad), std::invalid_argument);
}

TEST(Merge, ReflectionIsCorrected) {
  // Planar points: a reflection through the plane fits equally well, the
  // estimate must still be a proper rotation.
  oracle::RandomPoses r(44);
  const Pose6D t = r.pose();
  std::vector<PosePair> pairs;
  for (int i = 0; i < 6; ++i) {
    const Pose6D b(Vec3(r.uniform(-2, 2), r.uniform(-2, 2), 0.0), Quat::Identity());
    pairs.push_back({t * b, b});
  }
  const auto ft = estimate_transform(pairs);
  EXPECT_NEAR(ft.rt.rotation_matrix().determinant(), 1.0, 1e-12);
  EXPECT_LT(pose_error(ft.rt, t), 1e-9);
  EXPECT_NEAR(ft.scale, 1.0, 1e-9);
}

TEST(Merge, NoisyPointBranchIsLeastSquares) {
  oracle::RandomPoses r(45);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose6D t = r.pose();
    auto pairs = synthesize(r, t, 8);
    for (auto& p : pairs) {
      p.in_a = Pose6D(p.in_a.translation() + Vec3(r.normal(0.01), r.normal(0.01), r.normal(0.01)),
                      p.in_a.rotation());
    }
    const auto ft = estimate_transform(pairs);
    // Any nearby rigid transform has a residual at least as large.
    for (int k = 0; k < 20; ++k) {
      const Pose6D nudge = Pose6D::from_euler(
          Vec3(r.normal(1e-3), r.normal(1e-3), r.normal(1e-3)),
          Vec3(r.normal(1e-3), r.normal(1e-3), r.normal(1e-3)));
      EXPECT_GE(transform_residual(nudge * ft.rt, pairs), ft.residual - 1e-12);
    }
  }
}

TEST(Merge, MergeEmptyLoser) {
  GlobalMap map;
  map.add_frame(FrameId{0});
  map.add_frame(FrameId{1});
  map.insert_marker(FrameId{0}, 2, Pose6D(), iso(1), 0);
  PendingObservations pending;
  FrameTransform ft;
  ft.rt = Pose6D::from_euler(Vec3(1, 0, 0), Vec3(0, 0, 1));
  const auto notice = merge_frames(map, FrameId{0}, FrameId{1}, ft, pending);
  EXPECT_EQ(map.frames().size(), 1u);
  EXPECT_TRUE(notice.moved_markers.empty());
  EXPECT_EQ(map.lookup(2)->pose.vector(), Pose6D().vector());
  EXPECT_THROW(merge_frames(map, FrameId{0}, FrameId{0}, ft, pending), std::logic_error);
  EXPECT_THROW(merge_frames(map, FrameId{0}, FrameId{1}, ft, pending), std::logic_error);
}

TEST(Merge, MergedMarkersSatisfyTruthRelation) {
  // World truth with frame origins S0, S1: marker in frame k = S_k^-1 * M.
  oracle::RandomPoses r(46);
  const Pose6D s0 = r.pose(), s1 = r.pose();
  const Pose6D m_shared = r.pose(), m0 = r.pose(), m1 = r.pose();
  GlobalMap map;
  map.add_frame(FrameId{0});
  map.add_frame(FrameId{1});
  map.assign_drone(0, FrameId{0});
  map.assign_drone(1, FrameId{1});
  map.insert_marker(FrameId{0}, 1, s0.inverse() * m_shared, iso(0.01), 0);
  map.insert_marker(FrameId{0}, 2, s0.inverse() * m0, iso(0.01), 0);
  map.insert_marker(FrameId{1}, 3, s1.inverse() * m1, iso(0.01), 0);
  PendingObservations pending;
  pending.add(FrameId{1}, 1, s1.inverse() * m_shared, iso(0.01), 1);
  const auto ids = find_matches(map, FrameId{0}, FrameId{1}, pending);
  ASSERT_EQ(ids, std::vector<int>{1});
  const PosePair pair{map.lookup(1)->pose, pending.find(FrameId{1}, 1)->pose};
  FrameTransform ft = estimate_transform(std::span(&pair, 1));
  EXPECT_LT(pose_error(ft.rt, s0.inverse() * s1), 1e-9);

  const auto notice = merge_frames(map, FrameId{0}, FrameId{1}, ft, pending);
  EXPECT_EQ(notice.reassigned_drones, std::vector<int>{1});
  EXPECT_EQ(notice.moved_markers, std::vector<int>{3});
  EXPECT_EQ(map.frame_of(1), FrameId{0});
  EXPECT_LT(pose_error(map.lookup(3)->pose, s0.inverse() * m1), 1e-9);
  EXPECT_EQ(map.lookup(1)->obs_count, 2);
  EXPECT_EQ(pending.size(), 0u);
  EXPECT_NO_THROW(map.check_invariants());
}

TEST(Merge, ChainOfMergesLeavesOneFrame) {
  for (int k = 1; k <= 6; ++k) {
    GlobalMap map;
    PendingObservations pending;
    for (int f = 0; f <= k; ++f) {
      map.add_frame(FrameId{static_cast<std::uint32_t>(f)});
      map.assign_drone(f, FrameId{static_cast<std::uint32_t>(f)});
      map.insert_marker(FrameId{static_cast<std::uint32_t>(f)}, f, Pose6D(), iso(1), 0);
    }
    for (int f = k; f >= 1; --f) {
      merge_frames(map, FrameId{0}, FrameId{static_cast<std::uint32_t>(f)}, FrameTransform{},
                   pending);
    }
    EXPECT_EQ(map.frames().size(), 1u);
    EXPECT_EQ(map.drones_in(FrameId{0}).size(), static_cast<std::size_t>(k + 1));
    EXPECT_NO_THROW(map.check_invariants());
  }
}

namespace {

struct RefineFixture {
  Pose6D s0, s1;
  std::vector<Pose6D> markers;  // world truth
  GlobalMap map;
  FrameHistory history;

  // Frame 0 (drone 0) holds markers 0 and 1, frame 1 (drone 1) holds 2 and 3;
  // marker 0 was the single match, merged with transform `applied`.
  void build(const Pose6D& applied) {
    map.add_frame(FrameId{0});
    map.assign_drone(0, FrameId{0});
    map.assign_drone(1, FrameId{0});
    for (int id : {0, 1}) map.insert_marker(FrameId{0}, id, s0.inverse() * markers[id], iso(1e-4), 0);
    for (int id : {2, 3}) {
      map.insert_marker(FrameId{0}, id, applied * s1.inverse() * markers[id], iso(1e-4), 0);
    }
    MergeRecord rec;
    rec.winner = FrameId{0};
    rec.loser = FrameId{1};
    rec.applied = applied;
    rec.current_frame = FrameId{0};
    rec.matched_ids = {0};
    rec.pairs = {{s0.inverse() * markers[0], s1.inverse() * markers[0]}};
    rec.winner_drones = {0};
    rec.loser_drones = {1};
    rec.winner_markers = {0, 1};
    rec.loser_markers = {2, 3};
    history.add(rec);
  }
};

}  // namespace

TEST(Merge, RefineNoNewMatchIsNoop) {
  oracle::RandomPoses r(47);
  RefineFixture f{r.pose(), r.pose(), {r.pose(), r.pose(), r.pose(), r.pose()}, GlobalMap{}, {}};
  f.build(f.s0.inverse() * f.s1);
  // Already matched marker, and a same-side observation.
  EXPECT_FALSE(refine_transform(f.map, f.history, {0, 1, FrameId{0}, f.s0.inverse() * f.markers[0]}));
  EXPECT_FALSE(refine_transform(f.map, f.history, {1, 0, FrameId{0}, f.s0.inverse() * f.markers[1]}));
  EXPECT_EQ(f.history.records()[0].pairs.size(), 1u);
}

TEST(Merge, RefineConsistentSecondMatchBelowThreshold) {
  oracle::RandomPoses r(48);
  RefineFixture f{r.pose(), r.pose(), {r.pose(), r.pose(), r.pose(), r.pose()}, GlobalMap{}, {}};
  f.build(f.s0.inverse() * f.s1);
  const auto before = f.map.lookup(2)->pose;
  // Winner-side drone 0 sees loser marker 2 exactly where it should be.
  EXPECT_FALSE(refine_transform(f.map, f.history, {2, 0, FrameId{0}, f.s0.inverse() * f.markers[2]}));
  EXPECT_EQ(f.history.records()[0].pairs.size(), 2u);
  EXPECT_EQ(f.map.lookup(2)->pose.vector(), before.vector());
}

TEST(Merge, RefineCorrectsBiasedMerge) {
  oracle::RandomPoses r(49);
  RefineFixture f{r.pose(), r.pose(), {r.pose(), r.pose(), r.pose(), r.pose()}, GlobalMap{}, {}};
  const Pose6D truth = f.s0.inverse() * f.s1;
  const Pose6D bias = Pose6D::from_euler(Vec3(0.05, -0.02, 0.01), Vec3(0, 0, 0.03));
  f.build(truth * bias);
  const auto c1 = refine_transform(f.map, f.history, {2, 0, FrameId{0}, f.s0.inverse() * f.markers[2]});
  ASSERT_TRUE(c1);
  EXPECT_LE(c1->residual_after, c1->residual_before);
  EXPECT_LT(c1->residual_after, 1e-9);
  EXPECT_EQ(c1->moved_markers, (std::vector<int>{2, 3}));
  // The corrected map is consistent, so the next cross-side match changes nothing.
  EXPECT_FALSE(refine_transform(f.map, f.history, {3, 0, FrameId{0}, f.s0.inverse() * f.markers[3]}));
  EXPECT_LT(pose_error(f.history.records()[0].applied, truth), 1e-9);
  for (int id : {2, 3}) {
    EXPECT_LT(pose_error(f.map.lookup(id)->pose, f.s0.inverse() * f.markers[id]), 1e-9);
  }
}
