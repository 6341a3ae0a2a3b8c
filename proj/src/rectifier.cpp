#include "tilt/rectifier.hpp"

#include <cmath>
#include <numbers>

namespace tilt {

namespace {

void require_not_antipodal(const UnitVec3& e, const UnitVec3& g, const char* where) {
  if (e.dot(g) <= -1 + 1e-9) throw AntipodalInput(std::string(where) + ": e and g are antipodal");
}

std::array<Vector2d, 4> source_corners(const CameraIntrinsics& k) {
  const double w = k.width - 0.5, h = k.height - 0.5;
  return {Vector2d(-0.5, -0.5), Vector2d(w, -0.5), Vector2d(w, h), Vector2d(-0.5, h)};
}

struct Smoothed {
  std::vector<Vector3d> rotated_means;
  std::vector<double> variances;
};

Smoothed smoothed_modes(const RectificationProblem& pb, const Matrix3d& r) {
  const double h = pb.effective_bandwidth();
  Smoothed s;
  for (int j = 0; j < pb.p.k(); ++j) {
    s.rotated_means.push_back(r * pb.p.means[j]);
    s.variances.push_back(pb.p.variances[j] + h * h);
  }
  return s;
}

}  // namespace

Matrix3d grad_rotated_normal(const UnitVec3& e, const UnitVec3& g, const Vector3d& n) {
  require_not_antipodal(e, g, "grad_rotated_normal");
  const Vector3d s = e.vec() + g.vec();
  const double d = 1 + e.dot(g);
  const double alpha = n.dot(s);
  return (2 * g.vec().dot(n) - alpha / d) * Matrix3d::Identity() - (n * s.transpose()) / d +
         (alpha / (d * d)) * (g.vec() * s.transpose());
}

double RectificationProblem::effective_bandwidth() const {
  return bandwidth > 0 ? bandwidth : std::numbers::pi / q.binning.n_theta;
}

// --------------------------------------------------------------------------
// distribution term

double kl_term(const RectificationProblem& pb, const UnitVec3& e) {
  require_not_antipodal(e, pb.g, "kl_term");
  const Smoothed s = smoothed_modes(pb, rotation_formula<double>(pb.g.vec(), e.vec()));
  const SphereBinning& bins = pb.q.binning;
  std::vector<double> u(bins.size(), 0.0);
  double z = 0;
  for (int b = 0; b < bins.size(); ++b) {
    const double omega = bins.solid_angle(b);
    if (omega <= 0) continue;
    const Vector3d c = bins.center(b);
    double dens = 0;
    for (int j = 0; j < pb.p.k(); ++j) dens += pb.p.weights[j] * gaussian_density(s.rotated_means[j], s.variances[j], c);
    u[b] = omega * dens;
    z += u[b];
  }
  double kl = 0;
  for (int b = 0; b < bins.size(); ++b) {
    if (u[b] <= 0) continue;
    const double pi = u[b] / z;
    kl += pi * std::log(pi / pb.q.mass[b]);
  }
  return kl;
}

Vector3d kl_term_grad(const RectificationProblem& pb, const UnitVec3& e) {
  require_not_antipodal(e, pb.g, "kl_term_grad");
  const Smoothed s = smoothed_modes(pb, rotation_formula<double>(pb.g.vec(), e.vec()));
  const SphereBinning& bins = pb.q.binning;
  const int modes = pb.p.k();
  const int nb = bins.size();

  // Per-bin, per-mode kernel values.
  std::vector<double> kernel(std::size_t(nb) * modes, 0.0);
  std::vector<double> u(nb, 0.0), omega(nb);
  std::vector<Vector3d> centers(nb);
  double z = 0;
  for (int b = 0; b < nb; ++b) {
    omega[b] = bins.solid_angle(b);
    if (omega[b] <= 0) continue;
    centers[b] = bins.center(b);
    for (int j = 0; j < modes; ++j) {
      const double kv = gaussian_density(s.rotated_means[j], s.variances[j], centers[b]);
      kernel[std::size_t(b) * modes + j] = kv;
      u[b] += omega[b] * pb.p.weights[j] * kv;
    }
    z += u[b];
  }
  double kl = 0;
  std::vector<double> log_ratio(nb, 0.0);
  for (int b = 0; b < nb; ++b) {
    if (u[b] <= 0) continue;
    const double pi = u[b] / z;
    log_ratio[b] = std::log(pi / pb.q.mass[b]);
    kl += pi * log_ratio[b];
  }

  // grad KL = (1/Z) sum_b grad u_b (log(pi_b / Q_b) - KL), and
  // grad u_b = Omega_b sum_j w_j G_j N_jb (c_b - R mu_j) / s_j^2.
  Vector3d grad = Vector3d::Zero();
  for (int j = 0; j < modes; ++j) {
    Vector3d acc = Vector3d::Zero();
    for (int b = 0; b < nb; ++b) {
      if (u[b] <= 0) continue;
      acc += (omega[b] * kernel[std::size_t(b) * modes + j] * (log_ratio[b] - kl)) * (centers[b] - s.rotated_means[j]);
    }
    const Matrix3d gj = grad_rotated_normal(e, pb.g, pb.p.means[j]);
    grad += (pb.p.weights[j] / s.variances[j]) * (gj * acc);
  }
  return grad / z;
}

// --------------------------------------------------------------------------
// visibility term

std::array<Vector2d, 4> warped_corners(const CameraIntrinsics& k, const Rotation3& r) {
  const Matrix3d h = k.matrix() * r.matrix() * k.inverse();
  std::array<Vector2d, 4> out;
  const auto src = source_corners(k);
  for (int i = 0; i < 4; ++i) out[i] = apply_homography<double>(h, src[i]);
  return out;
}

namespace {

// Corners for the surrogate: homogeneous depth is clamped from below so
// corners at or behind the camera give a large finite area.
constexpr double kMinCornerDepth = 1e-3;

struct PenaltyCorner {
  Vector3d ray;  // K^-1 [u v 1]
  Vector3d w;    // K R ray
  bool clamped;
  Vector2d xy;
};

std::array<PenaltyCorner, 4> penalty_corners(const CameraIntrinsics& k, const Matrix3d& r) {
  const Matrix3d kinv = k.inverse();
  const Matrix3d h = k.matrix() * r * kinv;
  const auto src = source_corners(k);
  std::array<PenaltyCorner, 4> out;
  for (int i = 0; i < 4; ++i) {
    PenaltyCorner& c = out[i];
    const Vector3d p(src[i].x(), src[i].y(), 1.0);
    c.ray = kinv * p;
    c.w = h * p;
    c.clamped = c.w.z() < kMinCornerDepth;
    const double z = c.clamped ? kMinCornerDepth : c.w.z();
    c.xy = Vector2d(c.w.x() / z, c.w.y() / z);
  }
  return out;
}

double penalty_area(const std::array<PenaltyCorner, 4>& c) {
  return quad_area(std::array<Vector2d, 4>{c[0].xy, c[1].xy, c[2].xy, c[3].xy});
}

}  // namespace

double visibility_term(const CameraIntrinsics& k, const UnitVec3& g, const UnitVec3& e) {
  const double area = std::abs(penalty_area(penalty_corners(k, rotation_between(g, e).matrix())));
  const double full = double(k.width) * k.height;
  return std::max(0.0, area - full) / full;
}

Vector3d visibility_term_grad(const CameraIntrinsics& k, const UnitVec3& g, const UnitVec3& e) {
  const auto corners = penalty_corners(k, rotation_between(g, e).matrix());
  const double area = penalty_area(corners);
  const double full = double(k.width) * k.height;
  if (std::abs(area) <= full) return Vector3d::Zero();

  const double sign = area > 0 ? 1.0 : -1.0;
  const Matrix3d kmat = k.matrix();
  Vector3d grad = Vector3d::Zero();
  for (int i = 0; i < 4; ++i) {
    const PenaltyCorner& c = corners[i];
    const Vector2d& next = corners[(i + 1) % 4].xy;
    const Vector2d& prev = corners[(i + 3) % 4].xy;
    // Shoelace partials with respect to this corner.
    const Vector2d d_area(0.5 * (next.y() - prev.y()), 0.5 * (prev.x() - next.x()));
    Eigen::Matrix<double, 2, 3> d_proj;
    if (c.clamped) {
      d_proj << 1 / kMinCornerDepth, 0, 0, 0, 1 / kMinCornerDepth, 0;
    } else {
      const Vector3d& w = c.w;
      d_proj << 1 / w.z(), 0, -w.x() / (w.z() * w.z()), 0, 1 / w.z(), -w.y() / (w.z() * w.z());
    }
    grad += grad_rotated_normal(e, g, c.ray) * (kmat.transpose() * (d_proj.transpose() * d_area));
  }
  return sign * grad / full;
}

// --------------------------------------------------------------------------

ObjectiveTerms objective_terms(const RectificationProblem& pb, const UnitVec3& e) {
  ObjectiveTerms t;
  t.kl = kl_term(pb, e);
  t.visibility = visibility_term(pb.k, pb.g, e);
  t.total = t.kl + pb.lambda_e * t.visibility;
  return t;
}

Vector3d objective_grad(const RectificationProblem& pb, const UnitVec3& e) {
  Vector3d grad = kl_term_grad(pb, e);
  if (pb.lambda_e != 0) grad += pb.lambda_e * visibility_term_grad(pb.k, pb.g, e);
  return grad;
}

void RectifierConfig::validate() const {
  if (!(lambda_e >= 0)) throw InvalidArgument("RectifierConfig: lambda_e must be >= 0");
  if (!(step > 0)) throw InvalidArgument("RectifierConfig: step must be > 0");
  if (iters < 1) throw InvalidArgument("RectifierConfig: iters must be >= 1");
  if (decay_every > 0 && !(decay > 0 && decay <= 1)) throw InvalidArgument("RectifierConfig: decay must be in (0, 1]");
  if (!(tol >= 0)) throw InvalidArgument("RectifierConfig: tol must be >= 0");
}

RectifierResult optimize_e(const RectificationProblem& problem, const UnitVec3& init,
                           const RectifierConfig& cfg) {
  cfg.validate();
  RectificationProblem pb = problem;
  pb.lambda_e = cfg.lambda_e;
  require_not_antipodal(init, pb.g, "optimize_e");

  RectifierResult res;
  UnitVec3 e = init;
  res.iterates.push_back(e);
  res.objective_trace.push_back(objective(pb, e));
  double step = cfg.step;
  for (int it = 1; it <= cfg.iters; ++it) {
    const Vector3d grad = objective_grad(pb, e);
    const Vector3d tangent = grad - e.vec() * e.vec().dot(grad);
    if (tangent.norm() < cfg.tol) {
      res.converged = true;
      break;
    }
    if (cfg.decay_every > 0 && it > 1 && (it - 1) % cfg.decay_every == 0) step *= cfg.decay;
    e = UnitVec3(e.vec() - step * tangent);
    if (e.dot(pb.g) <= -1 + 1e-6) {
      throw AntipodalDrift("optimize_e: iterate drifted to -g", res.objective_trace, {e.x(), e.y(), e.z()});
    }
    res.iterates.push_back(e);
    res.objective_trace.push_back(objective(pb, e));
  }
  res.e_star = e;
  return res;
}

SphericalHistogram rectified_histogram(std::span<const UnitVec3> normals, const UnitVec3& g,
                                       const UnitVec3& e, const SphereBinning& binning, double floor) {
  const Rotation3 r = rotation_between(g, e);
  std::vector<UnitVec3> rotated;
  rotated.reserve(normals.size());
  for (const auto& n : normals) rotated.push_back(rotate_normal(r, n));
  return histogram_from_normals(rotated, binning, floor);
}

}  // namespace tilt
