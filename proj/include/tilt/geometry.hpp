#pragma once

// Unit vectors, slant/tilt angles, the gravity-to-principle-direction rotation
// and the homography it induces. Everything here is a pure function on small
// fixed-size Eigen types and is templated on the scalar type.
//
// Frames: stored vectors use the camera frame (x right, y down, z forward).
// The slant/tilt helpers are frame-agnostic; `to_viewer_frame` maps camera
// coordinates to the viewer frame (x right, y up, z toward the viewer) where
// visible surfaces have n_z > 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "tilt/errors.hpp"

namespace tilt {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vector2d = Vec2<double>;
using Vector3d = Vec3<double>;
using Matrix3d = Mat3<double>;

/// A direction of unit length. Construction normalizes; a zero vector is
/// rejected.
template <typename Scalar>
class UnitVector3 {
 public:
  UnitVector3() : v_(0, 0, 1) {}
  explicit UnitVector3(const Vec3<Scalar>& v) {
    const Scalar norm = v.norm();
    if (!(norm > Scalar(0)) || !std::isfinite(norm)) {
      throw InvalidArgument("UnitVector3: zero or non-finite input");
    }
    v_ = v / norm;
  }
  UnitVector3(Scalar x, Scalar y, Scalar z) : UnitVector3(Vec3<Scalar>(x, y, z)) {}

  const Vec3<Scalar>& vec() const { return v_; }
  Scalar x() const { return v_.x(); }
  Scalar y() const { return v_.y(); }
  Scalar z() const { return v_.z(); }
  Scalar dot(const UnitVector3& o) const { return v_.dot(o.v_); }
  UnitVector3 operator-() const { return UnitVector3(-v_); }

 private:
  Vec3<Scalar> v_;
};

using UnitVec3 = UnitVector3<double>;

/// Slant theta and tilt phi, radians.
template <typename Scalar>
struct SlantTiltAngles {
  Scalar theta = 0;
  Scalar phi = 0;
};
using SlantTilt = SlantTiltAngles<double>;

/// Tilt direction z: either exactly zero (pole) or a unit 2-vector.
template <typename Scalar>
class TiltDirectionT {
 public:
  TiltDirectionT() : z_(Vec2<Scalar>::Zero()) {}
  explicit TiltDirectionT(const Vec2<Scalar>& z) {
    const Scalar n = z.norm();
    z_ = n > Scalar(0) ? Vec2<Scalar>(z / n) : Vec2<Scalar>::Zero();
  }
  static TiltDirectionT pole() { return TiltDirectionT(); }
  bool is_pole() const { return z_.isZero(Scalar(0)); }
  const Vec2<Scalar>& vec() const { return z_; }

 private:
  Vec2<Scalar> z_;
};
using TiltDirection = TiltDirectionT<double>;

template <typename Scalar>
struct SlantTiltDirection {
  Scalar theta = 0;
  TiltDirectionT<Scalar> z;
};

/// Proper rotation. `from_matrix` checks orthonormality and det = 1.
template <typename Scalar>
class Rotation {
 public:
  Rotation() : m_(Mat3<Scalar>::Identity()) {}

  static Rotation identity() { return Rotation(); }

  static Rotation from_matrix(const Mat3<Scalar>& m, Scalar tol = Scalar(1e-9)) {
    const Mat3<Scalar> err = m.transpose() * m - Mat3<Scalar>::Identity();
    if (err.cwiseAbs().maxCoeff() > tol || std::abs(m.determinant() - Scalar(1)) > tol) {
      throw InvalidArgument("Rotation: matrix is not a proper rotation");
    }
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3<Scalar>& matrix() const { return m_; }
  Rotation transpose() const { return unchecked(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return unchecked(m_ * o.m_); }
  Vec3<Scalar> operator*(const Vec3<Scalar>& v) const { return m_ * v; }

 private:
  static Rotation unchecked(const Mat3<Scalar>& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }
  template <typename S>
  friend Rotation<S> rotation_between(const UnitVector3<S>&, const UnitVector3<S>&);

  Mat3<Scalar> m_;
};
using Rotation3 = Rotation<double>;

/// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 1, height = 1;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ValidationError("CameraIntrinsics: fx, fy must be > 0");
    if (width < 1 || height < 1) throw ValidationError("CameraIntrinsics: width, height must be >= 1");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw ValidationError("CameraIntrinsics: non-finite principal point");
  }

  Matrix3d matrix() const {
    Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
  Matrix3d inverse() const {
    Matrix3d k;
    k << 1 / fx, 0, -cx / fx, 0, 1 / fy, -cy / fy, 0, 0, 1;
    return k;
  }
  long pixel_count() const { return long(width) * long(height); }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Planar projective map in pixel coordinates.
template <typename Scalar>
class HomographyT {
 public:
  HomographyT() : h_(Mat3<Scalar>::Identity()) {}
  explicit HomographyT(const Mat3<Scalar>& h) : h_(h) {
    if (!(std::abs(h.determinant()) > Scalar(1e-12))) {
      throw InvalidArgument("Homography: singular matrix");
    }
  }
  const Mat3<Scalar>& matrix() const { return h_; }
  HomographyT inverse() const { return HomographyT(h_.inverse()); }
  HomographyT operator*(const HomographyT& o) const { return HomographyT(h_ * o.h_); }

 private:
  Mat3<Scalar> h_;
};
using Homography = HomographyT<double>;

// --------------------------------------------------------------------------
// angle representations

template <typename Scalar>
UnitVector3<Scalar> normal_from_slant_tilt(Scalar theta, Scalar phi) {
  using std::cos;
  using std::sin;
  return UnitVector3<Scalar>(cos(theta) * cos(phi), cos(theta) * sin(phi), sin(theta));
}

/// Supervision target (theta, z). With xi = n_x^2 + n_y^2, the pole case
/// xi < eps pins z to exactly zero and theta to pi/2.
template <typename Scalar>
SlantTiltDirection<Scalar> slant_tilt_from_normal(const UnitVector3<Scalar>& n,
                                                  Scalar eps = Scalar(1e-12)) {
  const Scalar xi = n.x() * n.x() + n.y() * n.y();
  SlantTiltDirection<Scalar> out;
  if (xi < eps) {
    out.theta = std::numbers::pi_v<Scalar> / 2;
    return out;
  }
  const Scalar r = std::sqrt(xi);
  out.theta = std::atan2(n.z(), r);
  out.z = TiltDirectionT<Scalar>(Vec2<Scalar>(n.x() / r, n.y() / r));
  return out;
}

/// (theta, phi) with theta = atan2(n_z, |n_xy|) and phi = atan2(n_y, n_x);
/// phi is 0 at the poles, where it is undefined.
template <typename Scalar>
SlantTiltAngles<Scalar> slant_tilt_angles(const UnitVector3<Scalar>& n, Scalar eps = Scalar(1e-12)) {
  const Scalar xi = n.x() * n.x() + n.y() * n.y();
  SlantTiltAngles<Scalar> a;
  a.theta = std::atan2(n.z(), std::sqrt(xi));
  a.phi = xi < eps ? Scalar(0) : std::atan2(n.y(), n.x());
  if (a.phi <= -std::numbers::pi_v<Scalar>) a.phi = std::numbers::pi_v<Scalar>;
  return a;
}

template <typename Scalar>
UnitVector3<Scalar> to_viewer_frame(const UnitVector3<Scalar>& n) {
  return UnitVector3<Scalar>(n.x(), -n.y(), -n.z());
}

template <typename Scalar>
UnitVector3<Scalar> from_viewer_frame(const UnitVector3<Scalar>& n) {
  return to_viewer_frame(n);
}

// --------------------------------------------------------------------------
// rotation and homography

/// R(g, e) = I + 2 e g^T - (e + g)(e + g)^T / (1 + e^T g) on raw 3-vectors.
/// Only a rotation when g and e are unit; the ambient form is what the
/// gradient formulas differentiate.
template <typename Scalar>
Mat3<Scalar> rotation_formula(const Vec3<Scalar>& g, const Vec3<Scalar>& e) {
  const Vec3<Scalar> s = e + g;
  return Mat3<Scalar>::Identity() + Scalar(2) * e * g.transpose() -
         (s * s.transpose()) / (Scalar(1) + e.dot(g));
}

/// Shortest-arc rotation taking g onto e. Antipodal pairs are rejected.
template <typename Scalar>
Rotation<Scalar> rotation_between(const UnitVector3<Scalar>& g, const UnitVector3<Scalar>& e) {
  if (g.dot(e) <= Scalar(-1) + Scalar(1e-9)) {
    throw AntipodalInput("rotation_between: g and e are antipodal");
  }
  return Rotation<Scalar>::unchecked(rotation_formula<Scalar>(g.vec(), e.vec()));
}

/// K R K^-1.
inline Homography homography_from_rotation(const CameraIntrinsics& k, const Rotation3& r) {
  return Homography(k.matrix() * r.matrix() * k.inverse());
}

/// Apply a homography to a pixel; throws BehindCamera when the third
/// homogeneous coordinate is not positive.
template <typename Scalar>
Vec2<Scalar> apply_homography(const Mat3<Scalar>& h, const Vec2<Scalar>& p,
                              Scalar min_depth = Scalar(1e-9)) {
  const Vec3<Scalar> w = h * Vec3<Scalar>(p.x(), p.y(), Scalar(1));
  if (!(w.z() > min_depth)) throw BehindCamera("point maps behind the image plane");
  return Vec2<Scalar>(w.x() / w.z(), w.y() / w.z());
}

/// Pi(K R K^-1 [u v 1]^T): where pixel (u, v) lands after rotating the view.
inline Vector2d project_pixel(const CameraIntrinsics& k, const Rotation3& r, const Vector2d& pixel) {
  return apply_homography<double>(k.matrix() * r.matrix() * k.inverse(), pixel);
}

/// Signed shoelace area of the quad A, B, C, D (top-left, top-right,
/// bottom-right, bottom-left). Positive for clockwise-on-screen order in
/// y-down pixel coordinates.
template <typename Scalar>
Scalar quad_area(const std::array<Vec2<Scalar>, 4>& c) {
  Scalar twice = 0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = c[i];
    const auto& b = c[(i + 1) % 4];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return twice / Scalar(2);
}

template <typename Scalar>
UnitVector3<Scalar> rotate_normal(const Rotation<Scalar>& r, const UnitVector3<Scalar>& n) {
  return UnitVector3<Scalar>(r.matrix() * n.vec());
}

/// Geodesic angle of a rotation, radians.
template <typename Scalar>
Scalar rotation_angle(const Rotation<Scalar>& r) {
  const Scalar c = (r.matrix().trace() - Scalar(1)) / Scalar(2);
  return std::acos(std::clamp(c, Scalar(-1), Scalar(1)));
}

/// Rotation about a unit axis (Rodrigues).
template <typename Scalar>
Rotation<Scalar> axis_angle(const Vec3<Scalar>& axis, Scalar angle) {
  const Vec3<Scalar> a = axis.normalized();
  Mat3<Scalar> k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  const Mat3<Scalar> m =
      Mat3<Scalar>::Identity() + std::sin(angle) * k + (Scalar(1) - std::cos(angle)) * k * k;
  return Rotation<Scalar>::from_matrix(m);
}

}  // namespace tilt
