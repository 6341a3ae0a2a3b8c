#pragma once

// Pointwise training losses on unit normals and slant/tilt angles, their
// closed-form gradients, and masked batch reductions.
//
// Gradient convention: every *_grad returns d loss / d pred projected onto the
// tangent plane of pred, (I - n n^T) d loss / d n. Descend by subtracting.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "tilt/geometry.hpp"
#include "tilt/image.hpp"

namespace tilt {

template <typename Scalar>
struct LossSampleT {
  UnitVector3<Scalar> pred;
  UnitVector3<Scalar> gt;
};
using LossSample = LossSampleT<double>;

struct TalConfig {
  double eps = 1e-6;
  void validate() const {
    if (!(eps > 0 && eps < 1)) throw InvalidArgument("TalConfig: eps must lie in (0, 1)");
  }
};

namespace detail {

template <typename Scalar>
Scalar clamped_cos(const UnitVector3<Scalar>& a, const UnitVector3<Scalar>& b) {
  return std::clamp(a.dot(b), Scalar(-1), Scalar(1));
}

/// (I - n n^T) v
template <typename Scalar>
Vec3<Scalar> tangent(const UnitVector3<Scalar>& n, const Vec3<Scalar>& v) {
  return v - n.vec() * n.vec().dot(v);
}

}  // namespace detail

// --- L2 / cosine --------------------------------------------------------

template <typename Scalar>
Scalar l2_loss(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt) {
  return Scalar(1) - pred.dot(gt);
}

template <typename Scalar>
Vec3<Scalar> l2_grad(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt) {
  return -detail::tangent(pred, gt.vec());
}

// --- angular ------------------------------------------------------------

template <typename Scalar>
Scalar angular_loss(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt) {
  return std::acos(detail::clamped_cos(pred, gt));
}

/// Undefined where |pred^T gt| >= 1 - 1e-9.
template <typename Scalar>
Vec3<Scalar> al_grad(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt) {
  const Scalar c = pred.dot(gt);
  if (std::abs(c) >= Scalar(1) - Scalar(1e-9)) {
    throw GradientUndefined("al_grad: acos is not differentiable at |c| = 1");
  }
  return -detail::tangent(pred, gt.vec()) / std::sqrt((Scalar(1) - c) * (Scalar(1) + c));
}

// --- truncated angular --------------------------------------------------

/// 0 for c >= 1 - eps, acos(c) for 0 <= c < 1 - eps, pi/2 - c for c < 0.
template <typename Scalar>
Scalar truncated_angular_loss_from_cos(Scalar c, const TalConfig& cfg = {}) {
  if (c >= Scalar(1) - Scalar(cfg.eps)) return Scalar(0);
  if (c >= Scalar(0)) return std::acos(c);
  return std::numbers::pi_v<Scalar> / 2 - c;
}

template <typename Scalar>
Scalar truncated_angular_loss(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt,
                              const TalConfig& cfg = {}) {
  return truncated_angular_loss_from_cos(detail::clamped_cos(pred, gt), cfg);
}

template <typename Scalar>
Vec3<Scalar> tal_grad(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt, const TalConfig& cfg = {}) {
  const Scalar c = detail::clamped_cos(pred, gt);
  if (c >= Scalar(1) - Scalar(cfg.eps)) return Vec3<Scalar>::Zero();
  const Vec3<Scalar> t = detail::tangent(pred, gt.vec());
  if (c >= Scalar(0)) return -t / std::sqrt((Scalar(1) - c) * (Scalar(1) + c));
  return -t;
}

// --- slant / tilt -------------------------------------------------------

/// min(|a - b|, 2 pi - |a - b|) for angles in (-pi, pi].
template <typename Scalar>
Scalar wrapped_angle_diff(Scalar a, Scalar b) {
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  Scalar d = std::fmod(std::abs(a - b), two_pi);
  return std::min(d, two_pi - d);
}

template <typename Scalar>
Scalar slant_tilt_loss(const SlantTiltAngles<Scalar>& pred, const SlantTiltAngles<Scalar>& gt) {
  return std::abs(pred.theta - gt.theta) + wrapped_angle_diff(pred.phi, gt.phi);
}

/// |theta - theta_hat| + lambda ||z - z_hat||_1
template <typename Scalar>
Scalar satd_loss(Scalar pred_theta, const TiltDirectionT<Scalar>& pred_z, Scalar gt_theta,
                 const TiltDirectionT<Scalar>& gt_z, Scalar lambda) {
  return std::abs(pred_theta - gt_theta) + lambda * (pred_z.vec() - gt_z.vec()).template lpNorm<1>();
}

/// Per-pixel slant/tilt predictions.
struct AngleMap {
  int width = 0;
  int height = 0;
  std::vector<SlantTilt> angles;

  const SlantTilt& at(int u, int v) const { return angles[std::size_t(v) * width + u]; }
};

/// Sum over planes of the mean |Theta(p) - mean Theta| (slant difference plus
/// wrapped tilt difference). The per-plane tilt mean is circular.
double plane_consistency_loss(const AngleMap& pred, std::span<const Mask> planes);

// --- reductions ---------------------------------------------------------

/// Pairwise (tree) summation in index order.
double pairwise_sum(std::span<const double> values);

/// Mean of loss_fn over samples whose mask entry is non-zero.
template <typename LossFn>
double batch_reduce(LossFn&& loss_fn, std::span<const LossSample> samples, std::span<const std::uint8_t> valid) {
  if (samples.size() != valid.size()) throw InvalidArgument("batch_reduce: mask size mismatch");
  std::vector<double> values;
  values.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (valid[i]) values.push_back(loss_fn(samples[i].pred, samples[i].gt));
  }
  if (values.empty()) throw NoValidSamples("batch_reduce: no valid samples");
  return pairwise_sum(values) / double(values.size());
}

}  // namespace tilt
