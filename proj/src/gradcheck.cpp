#include "tilt/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "tilt/direction_stats.hpp"
#include "tilt/errors.hpp"
#include "tilt/losses.hpp"
#include "tilt/random.hpp"
#include "tilt/rectifier.hpp"

namespace tilt {

namespace {

constexpr double kFloor = 1e-8;

double rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), kFloor});
  return (analytic - numeric).norm() / scale;
}

std::pair<Vector3d, Vector3d> tangent_basis(const Vector3d& n) {
  Vector3d a = Vector3d::Zero();
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  a[axis] = 1;
  const Vector3d t1 = (a - n * n.dot(a)).normalized();
  return {t1, n.cross(t1)};
}

/// Central differences of f along the two geodesics through n, assembled
/// into a tangent vector.
Vector3d sphere_fd(const std::function<double(const UnitVec3&)>& f, const UnitVec3& n, double h) {
  const auto [t1, t2] = tangent_basis(n.vec());
  Vector3d out = Vector3d::Zero();
  for (const Vector3d& t : {t1, t2}) {
    const UnitVec3 plus(std::cos(h) * n.vec() + std::sin(h) * t);
    const UnitVec3 minus(std::cos(h) * n.vec() - std::sin(h) * t);
    out += t * (f(plus) - f(minus)) / (2 * h);
  }
  return out;
}

Vector3d tangent_part(const Vector3d& v, const UnitVec3& n) { return v - n.vec() * n.vec().dot(v); }

UnitVec3 geodesic_offset(const UnitVec3& from, double angle, Rng& rng) {
  const auto [t1, t2] = tangent_basis(from.vec());
  const double a = rng.uniform(0, 2 * std::numbers::pi);
  const Vector3d t = std::cos(a) * t1 + std::sin(a) * t2;
  return UnitVec3(std::cos(angle) * from.vec() + std::sin(angle) * t);
}

struct Suite {
  GradcheckSuite result;
  void add(double err) {
    ++result.instances;
    result.max_rel_error = std::max(result.max_rel_error, std::isfinite(err) ? err : 1e300);
  }
};

template <typename LossFn, typename GradFn, typename Accept>
GradcheckSuite loss_suite(const char* name, double tol, const GradcheckConfig& cfg, std::uint64_t stream, LossFn loss,
                          GradFn grad, Accept accept) {
  Suite s{{name, 0, 0, tol}};
  Rng rng(cfg.seed * 1000003 + stream);
  const double sign = cfg.flip_sign ? -1.0 : 1.0;
  while (s.result.instances < cfg.trials) {
    const UnitVec3 pred(rng.unit_vector());
    const UnitVec3 gt(rng.unit_vector());
    if (!accept(pred.dot(gt))) continue;
    const Vector3d an = sign * grad(pred, gt);
    const Vector3d fd = sphere_fd([&](const UnitVec3& p) { return loss(p, gt); }, pred, 1e-6);
    s.add(rel_error(an, fd));
  }
  return s.result;
}

GradcheckSuite jacobian_suite(const GradcheckConfig& cfg) {
  Suite s{{"rotated_normal_jacobian", 0, 0, 1e-5}};
  Rng rng(cfg.seed * 1000003 + 4);
  const double sign = cfg.flip_sign ? -1.0 : 1.0;
  const double h = 1e-6;
  while (s.result.instances < cfg.trials) {
    const UnitVec3 g(rng.unit_vector());
    const UnitVec3 e(rng.unit_vector());
    if (e.dot(g) < -0.9) continue;
    const Vector3d n = rng.unit_vector();
    const Matrix3d an = sign * grad_rotated_normal(e, g, n);
    Matrix3d fd;
    for (int i = 0; i < 3; ++i) {
      Vector3d d = Vector3d::Zero();
      d[i] = h;
      const Vector3d plus = rotation_formula<double>(g.vec(), e.vec() + d) * n;
      const Vector3d minus = rotation_formula<double>(g.vec(), e.vec() - d) * n;
      fd.row(i) = ((plus - minus) / (2 * h)).transpose();
    }
    s.add(rel_error(an, fd));
  }
  return s.result;
}

GaussianMixture random_mixture(Rng& rng, int k, double var_lo, double var_hi) {
  GaussianMixture p;
  double total = 0;
  for (int j = 0; j < k; ++j) {
    p.weights.push_back(rng.uniform(0.2, 1.0));
    total += p.weights.back();
    p.means.push_back(rng.unit_vector());
    p.variances.push_back(rng.uniform(var_lo, var_hi));
  }
  for (double& w : p.weights) w /= total;
  return p;
}

GradcheckSuite gmm_suite(const GradcheckConfig& cfg) {
  Suite s{{"gmm_density", 0, 0, 1e-6}};
  Rng rng(cfg.seed * 1000003 + 5);
  const double sign = cfg.flip_sign ? -1.0 : 1.0;
  const double h = 1e-5;
  while (s.result.instances < cfg.trials) {
    const GaussianMixture p = random_mixture(rng, 1 + int(rng.index(4)), 0.05, 0.5);
    const Vector3d x = rng.unit_vector() * rng.uniform(0.5, 1.5);
    const Vector3d an = sign * gmm_density_grad(p, x);
    Vector3d fd;
    for (int i = 0; i < 3; ++i) {
      Vector3d d = Vector3d::Zero();
      d[i] = h;
      fd[i] = (gmm_density(p, x + d) - gmm_density(p, x - d)) / (2 * h);
    }
    s.add(rel_error(an, fd));
  }
  return s.result;
}

GradcheckSuite objective_suite(const GradcheckConfig& cfg) {
  Suite s{{"objective", 0, 0, 1e-4}};
  Rng rng(cfg.seed * 1000003 + 6);
  const double sign = cfg.flip_sign ? -1.0 : 1.0;
  const double h = 1e-5;
  const SphereBinning binning{19, 36};
  while (s.result.instances < cfg.trials) {
    RectificationProblem pb;
    pb.k = CameraIntrinsics{rng.uniform(200, 400), rng.uniform(200, 400), rng.uniform(140, 180),
                            rng.uniform(100, 140), 320, 240};
    pb.g = UnitVec3(rng.unit_vector());
    std::vector<UnitVec3> sample;
    for (int i = 0; i < 200; ++i) sample.emplace_back(rng.unit_vector());
    pb.q = histogram_from_normals(sample, binning, 1e-3);
    pb.p = random_mixture(rng, 1 + int(rng.index(3)), 0.01, 0.1);
    pb.lambda_e = rng.uniform(0, 1);
    const UnitVec3 e = geodesic_offset(pb.g, rng.uniform(0, 0.8), rng);

    // Skip instances whose visibility kink lies inside the stencil.
    const auto [t1, t2] = tangent_basis(e.vec());
    bool straddles = false;
    const bool active = visibility_term(pb.k, pb.g, e) > 0;
    for (const Vector3d& t : {t1, t2}) {
      for (double side : {-1.0, 1.0}) {
        const UnitVec3 q(std::cos(h) * e.vec() + side * std::sin(h) * t);
        straddles = straddles || ((visibility_term(pb.k, pb.g, q) > 0) != active);
      }
    }
    if (straddles) continue;

    const Vector3d an = sign * tangent_part(objective_grad(pb, e), e);
    const Vector3d fd = sphere_fd([&](const UnitVec3& x) { return objective(pb, x); }, e, h);
    s.add(rel_error(an, fd));
  }
  return s.result;
}

}  // namespace

void GradcheckConfig::validate() const {
  if (trials < 1) throw InvalidArgument("gradcheck: trials must be >= 1");
}

GradcheckReport run_gradcheck(const GradcheckConfig& cfg) {
  cfg.validate();
  GradcheckReport report;
  auto all = [](double) { return true; };
  report.suites.push_back(loss_suite(
      "l2", 1e-5, cfg, 1, [](const UnitVec3& p, const UnitVec3& g) { return l2_loss(p, g); },
      [](const UnitVec3& p, const UnitVec3& g) { return l2_grad(p, g); }, all));
  report.suites.push_back(loss_suite(
      "angular", 1e-5, cfg, 2, [](const UnitVec3& p, const UnitVec3& g) { return angular_loss(p, g); },
      [](const UnitVec3& p, const UnitVec3& g) { return al_grad(p, g); },
      [](double c) { return std::abs(c) < 1 - 1e-4; }));
  const TalConfig tal;
  report.suites.push_back(loss_suite(
      "truncated_angular", 1e-5, cfg, 3,
      [&](const UnitVec3& p, const UnitVec3& g) { return truncated_angular_loss(p, g, tal); },
      [&](const UnitVec3& p, const UnitVec3& g) { return tal_grad(p, g, tal); },
      [&](double c) { return c < 1 - 1e-4 && std::abs(c) > 1e-4; }));
  report.suites.push_back(jacobian_suite(cfg));
  report.suites.push_back(gmm_suite(cfg));
  report.suites.push_back(objective_suite(cfg));
  return report;
}

}  // namespace tilt
