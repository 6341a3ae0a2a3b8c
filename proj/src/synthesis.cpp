#include "tilt/synthesis.hpp"

#include <cmath>
#include <limits>

#include "tilt/parallel.hpp"
#include "tilt/random.hpp"

namespace tilt {

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int axis = -1;
  bool positive = false;  // hit the max-side face of the axis
};

Vector3d face_color(int axis, bool positive) {
  static const Vector3d palette[6] = {{0.80, 0.35, 0.30}, {0.30, 0.70, 0.35}, {0.85, 0.85, 0.80},
                                      {0.55, 0.45, 0.30}, {0.35, 0.40, 0.80}, {0.70, 0.65, 0.40}};
  return palette[2 * axis + (positive ? 1 : 0)];
}

double texture_value(Texture tex, const Vector3d& p, int axis) {
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  if (tex == Texture::gradient) {
    return 0.5 + 0.25 * (std::sin(2.0 * p[a]) + std::cos(1.5 * p[b]));
  }
  const long ca = long(std::floor(p[a] / 0.5)), cb = long(std::floor(p[b] / 0.5));
  return ((ca + cb) & 1) ? 1.0 : 0.55;
}

}  // namespace

void SceneSpec::validate() const {
  k.validate();
  if (!(room_width > 0 && room_height > 0 && room_depth > 0)) {
    throw ValidationError("SceneSpec: room dimensions must be positive");
  }
  if (!(camera.x() > 0 && camera.x() < room_width && camera.y() > 0 && camera.y() < room_height &&
        camera.z() > 0 && camera.z() < room_depth)) {
    throw ValidationError("SceneSpec: camera must lie inside the room");
  }
}

Render render(const SceneSpec& spec, const Rotation3& view) {
  spec.validate();
  const CameraIntrinsics& k = spec.k;
  const Matrix3d world_to_cam = view.matrix() * axis_angle<double>(Vector3d::UnitY(), spec.yaw).matrix();
  const Matrix3d cam_to_world = world_to_cam.transpose();
  const Matrix3d kinv = k.inverse();
  const Vector3d hi(spec.room_width, spec.room_height, spec.room_depth);

  Render out{ImageGrid(k.width, k.height, 3), NormalMap(k.width, k.height), DepthMap(k.width, k.height)};
  parallel_for(std::size_t(k.height), [&](std::size_t row) {
    const int v = int(row);
    for (int u = 0; u < k.width; ++u) {
      const Vector3d ray_cam = kinv * Vector3d(u, v, 1.0);
      const Vector3d d = cam_to_world * ray_cam;
      Hit hit;
      for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) continue;
        const bool pos = d[a] > 0;
        const double t = ((pos ? hi[a] : 0.0) - spec.camera[a]) / d[a];
        if (t > 0 && t < hit.t) hit = {t, a, pos};
      }
      if (hit.axis < 0) continue;
      Vector3d n_world = Vector3d::Zero();
      n_world[hit.axis] = hit.positive ? -1.0 : 1.0;
      const Vector3d p = spec.camera + hit.t * d;
      out.normals.set(u, v, world_to_cam * n_world);
      out.depth.set(u, v, hit.t * ray_cam.z());
      const Vector3d color = face_color(hit.axis, hit.positive) * texture_value(spec.texture, p, hit.axis);
      for (int c = 0; c < 3; ++c) out.image.at(u, v, c) = color[c];
    }
  });
  return out;
}

TiltDraw random_tilt(double roll_range, double pitch_range, std::uint64_t seed) {
  const double limit = std::numbers::pi / 2;
  if (!(roll_range >= 0 && roll_range < limit && pitch_range >= 0 && pitch_range < limit)) {
    throw InvalidArgument("random_tilt: ranges must lie in [0, pi/2)");
  }
  Rng rng(seed);
  TiltDraw draw;
  draw.roll = rng.uniform(-roll_range, roll_range);
  draw.pitch = rng.uniform(-pitch_range, pitch_range);
  draw.rotation =
      axis_angle<double>(Vector3d::UnitZ(), draw.roll) * axis_angle<double>(Vector3d::UnitX(), draw.pitch);
  return draw;
}

TiltedSample synthesize_tilted(const SceneSpec& spec, const Rotation3& r_rand, const std::optional<EgtSearch>& search,
                               Interpolation interp) {
  return synthesize_tilted(render_upright(spec), spec.k, r_rand, search, interp);
}

TiltedSample synthesize_tilted(const Render& upright, const CameraIntrinsics& k, const Rotation3& r_rand,
                               const std::optional<EgtSearch>& search, Interpolation interp) {
  TiltedSample s;
  ImageWarp img = rotate_view(upright.image, r_rand, k, interp);
  NormalWarp nrm = warp_normal_map(upright.normals, r_rand, k, interp);
  s.image = std::move(img.image);
  s.visible = std::move(img.visible);
  s.normals = std::move(nrm.normals);
  s.r_rand = r_rand;
  s.g = rotate_normal(r_rand, upright_gravity());
  s.e_gt = upright_gravity();
  s.e_gt_source = EgtSource::analytic;

  if (search) {
    const std::vector<UnitVec3> normals = s.normals.valid_normals();
    RectificationProblem pb;
    pb.g = s.g;
    pb.p = fit_gmm(normals, search->modes, search->config.seed);
    pb.q = search->q;
    pb.k = k;
    s.e_gt = optimize_e(pb, s.g, search->config).e_star;
    s.e_gt_source = EgtSource::optimized;
  }
  return s;
}

}  // namespace tilt
