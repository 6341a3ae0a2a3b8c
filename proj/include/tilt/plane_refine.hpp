#pragma once

// Plane-annotation refinement: RANSAC plane fitting on back-projected depth
// followed by normal-guided region growing.

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tilt/geometry.hpp"
#include "tilt/image.hpp"

namespace tilt {

/// {p : normal^T p = offset}. Normals are oriented toward the camera
/// (offset <= 0).
struct Plane {
  UnitVec3 normal{0, 0, -1};
  double offset = 0;

  double distance(const Vector3d& p) const { return std::abs(normal.vec().dot(p) - offset); }
};

using PlaneMask = Mask;

Vector3d unproject(const CameraIntrinsics& k, double u, double v, double depth);

struct RansacResult {
  Plane plane;
  std::vector<std::size_t> inliers;
  /// Inlier count of the best sampled hypothesis.
  std::size_t best_hypothesis_inliers = 0;
};

/// Best of `iters` random 3-point hypotheses by inlier count
/// (|n^T p - d| <= inlier_thresh), then a least-squares refit on its inliers.
/// The refit is kept only when it does not lose inliers.
RansacResult ransac_plane(std::span<const Vector3d> points, double inlier_thresh, int iters,
                          std::uint64_t seed);

/// 4-connected breadth-first growth from the seed pixels. Seed pixels are
/// admitted on depth validity and distance alone; every other pixel also
/// needs a valid normal within angle_thresh of the plane normal.
PlaneMask region_grow(const PlaneMask& seed, const Plane& plane, const DepthMap& depth,
                      const NormalMap& normals, const CameraIntrinsics& k, double dist_thresh,
                      double angle_thresh);

struct RefineConfig {
  double inlier_thresh = 0.02;
  double dist_thresh = 0.20;
  double angle_thresh = 30.0 * std::numbers::pi / 180.0;
  double keep_ratio = 0.5;
  int iters = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MaskOutcome {
  std::size_t index = 0;
  bool kept = false;
  long original_pixels = 0;
  long refined_pixels = 0;
  std::size_t ransac_inliers = 0;
  Plane plane;
  std::string error;  // empty on success
};

struct RefineResult {
  std::vector<PlaneMask> kept;  // refined masks, input order
  std::vector<MaskOutcome> outcomes;
};

/// Per mask: RANSAC on its valid back-projected pixels, growth from the
/// inliers whose normals agree with the plane, kept iff
/// |refined| / |original| > keep_ratio. Failures are recorded per mask.
RefineResult refine_masks(std::span<const PlaneMask> masks, const DepthMap& depth, const NormalMap& normals,
                          const CameraIntrinsics& k, const RefineConfig& cfg = {});

}  // namespace tilt
