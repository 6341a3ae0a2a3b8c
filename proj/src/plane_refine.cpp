#include "tilt/plane_refine.hpp"

#include <Eigen/Eigenvalues>
#include <deque>

#include "tilt/parallel.hpp"
#include "tilt/random.hpp"

namespace tilt {

namespace {

Plane oriented(const Vector3d& normal, double offset) {
  if (offset > 0) return Plane{UnitVec3(-normal), -offset};
  return Plane{UnitVec3(normal), offset};
}

std::vector<std::size_t> inliers_of(const Plane& plane, std::span<const Vector3d> points, double thresh) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (plane.distance(points[i]) <= thresh) out.push_back(i);
  }
  return out;
}

struct Scatter {
  Vector3d centroid;
  Eigen::Vector3d eigenvalues;  // ascending
  Matrix3d eigenvectors;
};

template <typename Index>
Scatter scatter_of(std::span<const Vector3d> points, const Index& idx, std::size_t n) {
  Vector3d c = Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) c += points[idx(i)];
  c /= double(n);
  Matrix3d s = Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3d d = points[idx(i)] - c;
    s += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(s);
  return {c, es.eigenvalues(), es.eigenvectors()};
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Vector3d unproject(const CameraIntrinsics& k, double u, double v, double depth) {
  return depth * Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
}

RansacResult ransac_plane(std::span<const Vector3d> points, double inlier_thresh, int iters, std::uint64_t seed) {
  if (points.size() < 3) throw DegenerateInput("ransac_plane: fewer than 3 points");
  if (iters < 1) throw InvalidArgument("ransac_plane: iters must be >= 1");
  if (!(inlier_thresh >= 0)) throw InvalidArgument("ransac_plane: inlier_thresh must be >= 0");

  const Scatter all = scatter_of(points, [](std::size_t i) { return i; }, points.size());
  if (all.eigenvalues(1) <= 1e-12 * std::max(all.eigenvalues(2), 1e-300)) {
    throw DegenerateInput("ransac_plane: points are collinear");
  }

  Rng rng(seed);
  const std::size_t n = points.size();
  RansacResult best;
  bool have = false;
  for (int it = 0; it < iters; ++it) {
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a) ++b;
    std::size_t c = rng.index(n - 2);
    if (c >= std::min(a, b)) ++c;
    if (c >= std::max(a, b)) ++c;
    const Vector3d cross = (points[b] - points[a]).cross(points[c] - points[a]);
    if (cross.norm() <= 1e-12) continue;
    const Vector3d normal = cross.normalized();
    const Plane hyp = oriented(normal, normal.dot(points[a]));
    std::vector<std::size_t> in = inliers_of(hyp, points, inlier_thresh);
    if (!have || in.size() > best.inliers.size()) {
      best.plane = hyp;
      best.inliers = std::move(in);
      have = true;
    }
  }
  if (!have) throw DegenerateInput("ransac_plane: every sampled triple was collinear");
  best.best_hypothesis_inliers = best.inliers.size();

  if (best.inliers.size() >= 3) {
    const auto& idx = best.inliers;
    const Scatter s = scatter_of(points, [&](std::size_t i) { return idx[i]; }, idx.size());
    if (s.eigenvalues(1) > 0) {
      const Vector3d normal = s.eigenvectors.col(0);
      const Plane refit = oriented(normal, normal.dot(s.centroid));
      std::vector<std::size_t> in = inliers_of(refit, points, inlier_thresh);
      if (in.size() >= best.inliers.size()) {
        best.plane = refit;
        best.inliers = std::move(in);
      }
    }
  }
  return best;
}

PlaneMask region_grow(const PlaneMask& seed, const Plane& plane, const DepthMap& depth, const NormalMap& normals,
                      const CameraIntrinsics& k, double dist_thresh, double angle_thresh) {
  if (seed.count() == 0) throw EmptySeed("region_grow: empty seed mask");
  if (seed.width != depth.width || seed.height != depth.height || normals.width != depth.width ||
      normals.height != depth.height) {
    throw InvalidArgument("region_grow: seed, depth and normal maps differ in size");
  }
  const double cos_thresh = std::cos(angle_thresh);
  auto near_plane = [&](int u, int v) {
    return depth.is_valid(u, v) && plane.distance(unproject(k, u, v, depth.at(u, v))) < dist_thresh;
  };
  auto agrees = [&](int u, int v) {
    return normals.is_valid(u, v) && angle_thresh > 0 && normals.at(u, v).dot(plane.normal.vec()) > cos_thresh;
  };

  PlaneMask out(seed.width, seed.height);
  std::deque<std::pair<int, int>> queue;
  for (int v = 0; v < seed.height; ++v) {
    for (int u = 0; u < seed.width; ++u) {
      if (seed(u, v) && near_plane(u, v)) {
        out.set(u, v, true);
        queue.emplace_back(u, v);
      }
    }
  }
  constexpr int du[4] = {1, -1, 0, 0};
  constexpr int dv[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const auto [u, v] = queue.front();
    queue.pop_front();
    for (int i = 0; i < 4; ++i) {
      const int nu = u + du[i], nv = v + dv[i];
      if (!out.in_bounds(nu, nv) || out(nu, nv)) continue;
      if (near_plane(nu, nv) && agrees(nu, nv)) {
        out.set(nu, nv, true);
        queue.emplace_back(nu, nv);
      }
    }
  }
  return out;
}

void RefineConfig::validate() const {
  if (!(inlier_thresh >= 0 && dist_thresh >= 0 && angle_thresh >= 0)) {
    throw InvalidArgument("RefineConfig: thresholds must be >= 0");
  }
  if (!(keep_ratio >= 0)) throw InvalidArgument("RefineConfig: keep_ratio must be >= 0");
  if (iters < 1) throw InvalidArgument("RefineConfig: iters must be >= 1");
}

RefineResult refine_masks(std::span<const PlaneMask> masks, const DepthMap& depth, const NormalMap& normals,
                          const CameraIntrinsics& k, const RefineConfig& cfg) {
  cfg.validate();
  std::vector<MaskOutcome> outcomes(masks.size());
  std::vector<PlaneMask> refined(masks.size());
  const double cos_thresh = std::cos(cfg.angle_thresh);

  parallel_for(masks.size(), [&](std::size_t m) {
    MaskOutcome& out = outcomes[m];
    out.index = m;
    const PlaneMask& mask = masks[m];
    try {
      if (mask.width != depth.width || mask.height != depth.height) {
        throw InvalidArgument("mask size differs from the depth map");
      }
      out.original_pixels = mask.count();
      if (out.original_pixels == 0) throw EmptySeed("empty mask");

      std::vector<Vector3d> points;
      std::vector<std::pair<int, int>> pixels;
      for (int v = 0; v < mask.height; ++v) {
        for (int u = 0; u < mask.width; ++u) {
          if (mask(u, v) && depth.is_valid(u, v)) {
            points.push_back(unproject(k, u, v, depth.at(u, v)));
            pixels.emplace_back(u, v);
          }
        }
      }
      const RansacResult fit = ransac_plane(points, cfg.inlier_thresh, cfg.iters, mix(cfg.seed ^ mix(m)));
      out.plane = fit.plane;
      out.ransac_inliers = fit.inliers.size();

      PlaneMask seed(mask.width, mask.height);
      for (std::size_t i : fit.inliers) {
        const auto [u, v] = pixels[i];
        if (normals.is_valid(u, v) && normals.at(u, v).dot(fit.plane.normal.vec()) > cos_thresh) seed.set(u, v, true);
      }
      if (seed.count() > 0) {
        refined[m] = region_grow(seed, fit.plane, depth, normals, k, cfg.dist_thresh, cfg.angle_thresh);
        out.refined_pixels = refined[m].count();
      }
      out.kept = double(out.refined_pixels) / double(out.original_pixels) > cfg.keep_ratio;
    } catch (const Error& e) {
      out.kept = false;
      out.error = e.what();
    }
  });

  RefineResult result;
  result.outcomes = std::move(outcomes);
  for (std::size_t m = 0; m < masks.size(); ++m) {
    if (result.outcomes[m].kept) result.kept.push_back(std::move(refined[m]));
  }
  return result;
}

}  // namespace tilt
