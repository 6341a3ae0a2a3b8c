#pragma once

// Homography resampling of images and normal maps with explicit visibility,
// and the rectify -> estimate -> unrectify composition.
//
// Pixel centers sit at integer coordinates; the source rectangle is
// [-0.5, W - 0.5) x [-0.5, H - 0.5).

#include <functional>

#include "tilt/geometry.hpp"
#include "tilt/image.hpp"

namespace tilt {

enum class Interpolation { nearest, bilinear };

struct ImageWarp {
  ImageGrid image;
  Mask visible;
};

struct NormalWarp {
  NormalMap normals;
  Mask visible;
};

/// Output pixel x takes the value of `src` at lookup(x). Lookups that land
/// outside the source rectangle or behind the camera are 0 and invisible.
ImageWarp warp_image(const ImageGrid& src, const Homography& lookup, Interpolation interp);

/// Re-renders a normal map for a camera whose directions are rotated by `r`:
/// every normal is rotated by r, and pixels move by the forward map K r K^-1
/// (so the lookup is K r^T K^-1). Pixels whose source is invalid, outside the
/// grid or behind the camera come out invalid.
NormalWarp warp_normal_map(const NormalMap& src, const Rotation3& r, const CameraIntrinsics& k,
                           Interpolation interp);

/// Image counterpart of warp_normal_map: the view after rotating camera
/// directions by r.
ImageWarp rotate_view(const ImageGrid& src, const Rotation3& r, const CameraIntrinsics& k,
                      Interpolation interp);

/// Number of pixels with no valid source.
long invisible_count(const Mask& visible);
inline long invisible_count(const ImageWarp& w) { return invisible_count(w.visible); }
inline long invisible_count(const NormalWarp& w) { return invisible_count(w.visible); }

using NormalEstimator = std::function<NormalMap(const ImageGrid&)>;

/// Rectifies `img` with R(g, e), runs the estimator on the rectified image,
/// rotates its prediction by R^T and resamples it back to the tilted frame.
/// Pixels that were not visible in the rectified frame are invalid.
NormalMap rectify_estimate_unrectify(const ImageGrid& img, const UnitVec3& g, const UnitVec3& e,
                                     const CameraIntrinsics& k, const NormalEstimator& estimator,
                                     Interpolation interp = Interpolation::bilinear);

}  // namespace tilt
