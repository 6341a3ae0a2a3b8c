#include <gtest/gtest.h>

#include "oracles.hpp"
#include "plane_scene.hpp"
#include "tilt/plane_refine.hpp"

using namespace tilt;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

/// Points on {n^T p = offset} inside a 4 m square.
std::vector<Vector3d> plane_points(const Vector3d& n, double offset, int count, double noise, Rng& rng) {
  const Vector3d a = std::abs(n.x()) < 0.6 ? Vector3d::UnitX() : Vector3d::UnitY();
  const Vector3d t1 = (a - n * n.dot(a)).normalized();
  const Vector3d t2 = n.cross(t1);
  std::vector<Vector3d> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(n * offset + rng.uniform(-2, 2) * t1 + rng.uniform(-2, 2) * t2 + n * noise * rng.normal());
  }
  return out;
}

double normal_angle(const Vector3d& a, const Vector3d& b) {
  return std::min(oracle::angle_between(a, b), oracle::angle_between(a, -b));
}

bool passes_both(const scene::PlaneScene& s, const Plane& plane, int u, int v, const RefineConfig& cfg) {
  if (!s.depth.is_valid(u, v) || !s.normals.is_valid(u, v)) return false;
  const Vector3d p = unproject(s.k, u, v, s.depth.at(u, v));
  return plane.distance(p) < cfg.dist_thresh &&
         oracle::angle_between(s.normals.at(u, v), plane.normal.vec()) < cfg.angle_thresh;
}

}  // namespace

TEST(Unproject, PrincipalRayAndRoundTrip) {
  const CameraIntrinsics k{300, 310, 159.5, 119.5, 320, 240};
  EXPECT_LT((unproject(k, k.cx, k.cy, 2.5) - Vector3d(0, 0, 2.5)).norm(), 1e-15);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(0, 319), v = rng.uniform(0, 239), d = rng.uniform(0.1, 10);
    const Vector3d p = unproject(k, u, v, d);
    EXPECT_NEAR(k.fx * p.x() / p.z() + k.cx, u, 1e-9);
    EXPECT_NEAR(k.fy * p.y() / p.z() + k.cy, v, 1e-9);
  }
}

TEST(Unproject, FloorPixelsSatisfyPlaneEquation) {
  const scene::PlaneScene s = scene::make_plane_scene(0, 0, 1);
  for (int v = 0; v < s.k.height; ++v) {
    for (int u = 0; u < s.k.width; ++u) {
      if (!s.floor(u, v)) continue;
      EXPECT_NEAR(unproject(s.k, u, v, s.depth.at(u, v)).y(), scene::kFloorY, 1e-6);
    }
  }
}

TEST(RansacPlane, ExactPlane) {
  Rng rng(2);
  const Vector3d n = Vector3d(0.2, -0.9, 0.3).normalized();
  const auto pts = plane_points(n, -1.5, 400, 0, rng);
  const RansacResult r = ransac_plane(pts, 0.02, 500, 7);
  EXPECT_EQ(r.inliers.size(), pts.size());
  EXPECT_LT(normal_angle(r.plane.normal.vec(), n), 1e-9);
  for (const Vector3d& p : pts) EXPECT_LT(r.plane.distance(p), 1e-9);
  EXPECT_LE(r.plane.offset, 0);
}

TEST(RansacPlane, OutliersAndNoise) {
  Rng rng(3);
  const Vector3d n = Vector3d(0.1, -1, 0.2).normalized();
  auto pts = plane_points(n, -1.2, 700, 0.01, rng);
  for (int i = 0; i < 300; ++i) pts.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.5, 5));
  const RansacResult r = ransac_plane(pts, 0.02, 500, 11);
  EXPECT_LT(normal_angle(r.plane.normal.vec(), n), 2 * kDeg);
  EXPECT_GE(r.inliers.size(), r.best_hypothesis_inliers);
}

TEST(RansacPlane, ZeroThresholdKeepsOnlyTheTriple) {
  Rng rng(4);
  const auto pts = plane_points(Vector3d(0, -1, 0), -1, 300, 0.01, rng);
  const RansacResult r = ransac_plane(pts, 0.0, 200, 1);
  EXPECT_LE(r.inliers.size(), 3u);
}

TEST(RansacPlane, DegenerateInput) {
  const std::vector<Vector3d> two{{0, 0, 1}, {1, 0, 1}};
  EXPECT_THROW(ransac_plane(two, 0.02, 10, 0), DegenerateInput);
  std::vector<Vector3d> line;
  for (int i = 0; i < 20; ++i) line.emplace_back(i, 2 * i, 1 + i);
  EXPECT_THROW(ransac_plane(line, 0.02, 10, 0), DegenerateInput);
}

TEST(RansacPlane, DeterministicUnderSeed) {
  Rng rng(5);
  auto pts = plane_points(Vector3d(0, 0, -1), -3, 300, 0.02, rng);
  for (int i = 0; i < 200; ++i) pts.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0.5, 5));
  const RansacResult a = ransac_plane(pts, 0.02, 100, 9);
  const RansacResult b = ransac_plane(pts, 0.02, 100, 9);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.plane.normal.vec(), b.plane.normal.vec());
  EXPECT_EQ(a.plane.offset, b.plane.offset);
}

TEST(RegionGrow, SeedGrowsToWholePlane) {
  const scene::PlaneScene s = scene::make_plane_scene(0, 0, 2);
  Mask seed(s.k.width, s.k.height);
  seed.set(160, 220, true);
  const Plane floor{UnitVec3(0, -1, 0), -scene::kFloorY};
  const Mask grown = region_grow(seed, floor, s.depth, s.normals, s.k, 0.2, 30 * kDeg);
  EXPECT_EQ(grown, s.floor);
}

TEST(RegionGrow, ZeroAngleKeepsDistancePassingSeeds) {
  const scene::PlaneScene s = scene::make_plane_scene(0, 0, 3);
  const Plane floor{UnitVec3(0, -1, 0), -scene::kFloorY};
  Mask seed(s.k.width, s.k.height);
  seed.set(100, 220, true);  // floor
  seed.set(101, 220, true);  // floor
  seed.set(100, 20, true);   // wall, far from the floor plane
  const Mask grown = region_grow(seed, floor, s.depth, s.normals, s.k, 0.2, 0.0);
  Mask expected(s.k.width, s.k.height);
  expected.set(100, 220, true);
  expected.set(101, 220, true);
  EXPECT_EQ(grown, expected);
}

TEST(RegionGrow, StopsAtInvalidDepth) {
  scene::PlaneScene s = scene::make_plane_scene(0, 0, 4);
  for (int v = 0; v < s.k.height; ++v) s.depth.set(160, v, 0.0);
  Mask seed(s.k.width, s.k.height);
  seed.set(50, 220, true);
  const Plane floor{UnitVec3(0, -1, 0), -scene::kFloorY};
  const Mask grown = region_grow(seed, floor, s.depth, s.normals, s.k, 0.2, 30 * kDeg);
  for (int v = 0; v < s.k.height; ++v) {
    for (int u = 160; u < s.k.width; ++u) EXPECT_FALSE(grown(u, v));
  }
  EXPECT_TRUE(grown(159, 239));
}

TEST(RegionGrow, EmptySeedThrows) {
  const scene::PlaneScene s = scene::make_plane_scene(0, 0, 5);
  EXPECT_THROW(region_grow(Mask(s.k.width, s.k.height), Plane{}, s.depth, s.normals, s.k, 0.2, 0.5), EmptySeed);
}

TEST(RefineMasks, AlignedMaskKept) {
  const scene::PlaneScene s = scene::make_plane_scene(0.01, 2 * kDeg, 6);
  const Mask masks[] = {s.floor};
  const RefineResult r = refine_masks(masks, s.depth, s.normals, s.k);
  ASSERT_EQ(r.kept.size(), 1u);
  long inside = 0;
  for (std::size_t i = 0; i < s.floor.bits.size(); ++i) inside += s.floor.bits[i] && r.kept[0].bits[i];
  EXPECT_GE(double(inside), 0.95 * double(s.floor.count()));
}

TEST(RefineMasks, BleedingMaskRecoversFloor) {
  const scene::PlaneScene s = scene::make_plane_scene(0.01, 2 * kDeg, 7);
  const Mask bleed = scene::bleeding_floor_mask(s, 0.3);
  const Mask masks[] = {bleed, s.clutter};
  const RefineConfig cfg;
  const RefineResult r = refine_masks(masks, s.depth, s.normals, s.k, cfg);
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_TRUE(r.outcomes[0].kept);
  EXPECT_FALSE(r.outcomes[1].kept);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_GE(scene::iou(r.kept[0], s.floor), 0.95);

  // Every refined pixel passes both criteria against the fitted plane.
  const Plane& plane = r.outcomes[0].plane;
  for (int v = 0; v < s.k.height; ++v) {
    for (int u = 0; u < s.k.width; ++u) {
      if (r.kept[0](u, v)) ASSERT_TRUE(passes_both(s, plane, u, v, cfg)) << u << "," << v;
    }
  }
}

TEST(RefineMasks, EmptyListAndPerMaskErrors) {
  const scene::PlaneScene s = scene::make_plane_scene(0, 0, 8);
  EXPECT_TRUE(refine_masks({}, s.depth, s.normals, s.k).outcomes.empty());

  Mask tiny(s.k.width, s.k.height);
  tiny.set(10, 230, true);
  const Mask masks[] = {tiny, s.floor};
  const RefineResult r = refine_masks(masks, s.depth, s.normals, s.k);
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_FALSE(r.outcomes[0].error.empty());
  EXPECT_FALSE(r.outcomes[0].kept);
  EXPECT_TRUE(r.outcomes[1].kept);
}

TEST(RefineMasks, DeterministicAcrossRuns) {
  const scene::PlaneScene s = scene::make_plane_scene(0.01, 2 * kDeg, 9);
  const Mask masks[] = {scene::bleeding_floor_mask(s, 0.3), s.clutter};
  const RefineResult a = refine_masks(masks, s.depth, s.normals, s.k);
  const RefineResult b = refine_masks(masks, s.depth, s.normals, s.k);
  ASSERT_EQ(a.kept.size(), b.kept.size());
  for (std::size_t i = 0; i < a.kept.size(); ++i) EXPECT_EQ(a.kept[i], b.kept[i]);
}

TEST(RefineConfig, Validation) {
  RefineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.keep_ratio = -0.1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = RefineConfig{};
  c.iters = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}
