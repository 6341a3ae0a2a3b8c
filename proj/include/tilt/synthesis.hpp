#pragma once

// Procedural box-room scenes with exact normals and depth, and tilted
// samples generated from them by a random camera rotation.

#include <cstdint>
#include <optional>
#include <string>

#include "tilt/direction_stats.hpp"
#include "tilt/geometry.hpp"
#include "tilt/image.hpp"
#include "tilt/rectifier.hpp"
#include "tilt/warping.hpp"

namespace tilt {

enum class Texture { checker = 0, gradient = 1 };

/// Axis-aligned room [0, width] x [0, height] x [0, depth] in a world frame
/// with y pointing down (y = 0 is the ceiling, y = height the floor). The
/// camera sits at `camera` and is turned by `yaw` about the vertical axis.
struct SceneSpec {
  double room_width = 6.0;
  double room_height = 3.0;
  double room_depth = 8.0;
  Vector3d camera{3.0, 1.5, 1.0};
  double yaw = 0.0;
  Texture texture = Texture::checker;
  CameraIntrinsics k{300.0, 300.0, 159.5, 119.5, 320, 240};

  void validate() const;
};

struct Render {
  ImageGrid image;  // 3 channels in [0, 1]
  NormalMap normals;
  DepthMap depth;
};

/// Ray-casts the room for a camera whose viewing directions are additionally
/// rotated by `view` (world-to-camera = view * yaw rotation). Normals are
/// inward face normals in camera coordinates; depth is the camera z.
Render render(const SceneSpec& spec, const Rotation3& view);
inline Render render_upright(const SceneSpec& spec) { return render(spec, Rotation3::identity()); }

struct TiltDraw {
  double roll = 0;
  double pitch = 0;
  Rotation3 rotation;
};

/// R = Rz(roll) Rx(pitch) with roll, pitch uniform in [-range, range].
TiltDraw random_tilt(double roll_range, double pitch_range, std::uint64_t seed);
inline Rotation3 random_rotation(double roll_range, double pitch_range, std::uint64_t seed) {
  return random_tilt(roll_range, pitch_range, seed).rotation;
}

/// Gravity of an upright camera.
inline UnitVec3 upright_gravity() { return UnitVec3(0, 1, 0); }

enum class EgtSource { analytic, optimized };

struct TiltedSample {
  ImageGrid image;
  Mask visible;
  NormalMap normals;
  UnitVec3 g;
  UnitVec3 e_gt;
  Rotation3 r_rand;
  EgtSource e_gt_source = EgtSource::analytic;
};

/// Optional optimizer run for e_gt. Without it e_gt is the upright gravity
/// (0, 1, 0), the target that undoes the tilt.
struct EgtSearch {
  SphericalHistogram q;
  int modes = 5;
  RectifierConfig config;
};

/// Warps the upright render by K R K^-1, rotates its normals by R and sets
/// g = R (0, 1, 0).
TiltedSample synthesize_tilted(const SceneSpec& spec, const Rotation3& r_rand,
                               const std::optional<EgtSearch>& search = std::nullopt,
                               Interpolation interp = Interpolation::bilinear);
TiltedSample synthesize_tilted(const Render& upright, const CameraIntrinsics& k, const Rotation3& r_rand,
                               const std::optional<EgtSearch>& search = std::nullopt,
                               Interpolation interp = Interpolation::bilinear);

}  // namespace tilt
