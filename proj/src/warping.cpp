#include "tilt/warping.hpp"

#include <cmath>

namespace tilt {

namespace {

constexpr double kMinDepth = 1e-9;
// Taps whose normal is more than ~25 degrees off the nearest tap are
// treated as another surface.
constexpr double kCreaseCos = 0.9;

struct Lookup {
  bool visible = false;
  double x = 0, y = 0;
};

Lookup lookup(const Matrix3d& h, int u, int v, int width, int height) {
  const Vector3d w = h * Vector3d(u, v, 1.0);
  Lookup l;
  if (!(w.z() > kMinDepth)) return l;
  l.x = w.x() / w.z();
  l.y = w.y() / w.z();
  l.visible = l.x >= -0.5 && l.x < width - 0.5 && l.y >= -0.5 && l.y < height - 0.5;
  return l;
}

struct Taps {
  int u[4];
  int v[4];
  double w[4];
};

// Bilinear taps, clamped to the grid; the lookup is known to be inside the
// source rectangle.
Taps bilinear_taps(double x, double y, int width, int height) {
  const double fx = std::floor(x), fy = std::floor(y);
  const double ax = x - fx, ay = y - fy;
  const int x0 = std::clamp(int(fx), 0, width - 1), x1 = std::clamp(int(fx) + 1, 0, width - 1);
  const int y0 = std::clamp(int(fy), 0, height - 1), y1 = std::clamp(int(fy) + 1, 0, height - 1);
  return Taps{{x0, x1, x0, x1}, {y0, y0, y1, y1}, {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay}};
}

int nearest_index(double x, int size) { return std::clamp(int(std::floor(x + 0.5)), 0, size - 1); }

}  // namespace

ImageWarp warp_image(const ImageGrid& src, const Homography& h, Interpolation interp) {
  ImageWarp out{ImageGrid(src.width, src.height, src.channels), Mask(src.width, src.height)};
  const Matrix3d& m = h.matrix();
  for (int v = 0; v < src.height; ++v) {
    for (int u = 0; u < src.width; ++u) {
      const Lookup l = lookup(m, u, v, src.width, src.height);
      if (!l.visible) continue;
      out.visible.set(u, v, true);
      if (interp == Interpolation::nearest) {
        const int su = nearest_index(l.x, src.width), sv = nearest_index(l.y, src.height);
        for (int c = 0; c < src.channels; ++c) out.image.at(u, v, c) = src.at(su, sv, c);
      } else {
        const Taps t = bilinear_taps(l.x, l.y, src.width, src.height);
        for (int c = 0; c < src.channels; ++c) {
          double acc = 0;
          for (int i = 0; i < 4; ++i) acc += t.w[i] * src.at(t.u[i], t.v[i], c);
          out.image.at(u, v, c) = acc;
        }
      }
    }
  }
  return out;
}

NormalWarp warp_normal_map(const NormalMap& src, const Rotation3& r, const CameraIntrinsics& k,
                           Interpolation interp) {
  NormalWarp out{NormalMap(src.width, src.height), Mask(src.width, src.height)};
  const Matrix3d lookup_h = k.matrix() * r.matrix().transpose() * k.inverse();
  const Matrix3d& rm = r.matrix();
  for (int v = 0; v < src.height; ++v) {
    for (int u = 0; u < src.width; ++u) {
      const Lookup l = lookup(lookup_h, u, v, src.width, src.height);
      if (!l.visible) continue;
      out.visible.set(u, v, true);
      const int nu = nearest_index(l.x, src.width), nv = nearest_index(l.y, src.height);
      if (!src.is_valid(nu, nv)) continue;
      Vector3d n = src.at(nu, nv);
      if (interp == Interpolation::bilinear) {
        // Average the valid taps that lie on the nearest tap's surface.
        const Taps t = bilinear_taps(l.x, l.y, src.width, src.height);
        Vector3d acc = Vector3d::Zero();
        for (int i = 0; i < 4; ++i) {
          if (t.w[i] <= 0 || !src.is_valid(t.u[i], t.v[i])) continue;
          const Vector3d& m = src.at(t.u[i], t.v[i]);
          if (m.dot(n) < kCreaseCos) continue;
          acc += t.w[i] * m;
        }
        if (acc.squaredNorm() > 0) n = acc;
      }
      out.normals.set(u, v, rm * n);
    }
  }
  return out;
}

ImageWarp rotate_view(const ImageGrid& src, const Rotation3& r, const CameraIntrinsics& k,
                      Interpolation interp) {
  return warp_image(src, homography_from_rotation(k, r.transpose()), interp);
}

long invisible_count(const Mask& visible) {
  return long(visible.bits.size()) - visible.count();
}

NormalMap rectify_estimate_unrectify(const ImageGrid& img, const UnitVec3& g, const UnitVec3& e,
                                     const CameraIntrinsics& k, const NormalEstimator& estimator,
                                     Interpolation interp) {
  const Rotation3 r = rotation_between(g, e);
  const ImageWarp rectified = rotate_view(img, r, k, interp);
  NormalMap predicted = estimator(rectified.image);
  if (predicted.width != img.width || predicted.height != img.height) {
    throw EstimatorShapeMismatch("estimator returned " + std::to_string(predicted.width) + "x" +
                                 std::to_string(predicted.height) + " for a " +
                                 std::to_string(img.width) + "x" + std::to_string(img.height) + " input");
  }
  for (int v = 0; v < predicted.height; ++v) {
    for (int u = 0; u < predicted.width; ++u) {
      if (!rectified.visible(u, v)) predicted.invalidate(u, v);
    }
  }
  return warp_normal_map(predicted, r.transpose(), k, interp).normals;
}

}  // namespace tilt
