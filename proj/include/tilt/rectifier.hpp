#pragma once

// Optimal principle direction: the distribution-matching + visibility
// objective over e, its closed-form gradient and projected gradient descent
// on the unit sphere.
//
// Distribution term. The image's normals are summarized by a Gaussian
// mixture P (fitted in the tilted frame). Rectifying with R = R(g, e) moves
// every mode mean to R mu_j. The rectified distribution is evaluated on the
// discretized sphere given by Q's bins,
//
//   u_b = Omega_b * sum_j w_j N(c_b; R mu_j, sigma_j^2 + h^2),   pi_b = u_b / sum u,
//
// with c_b the bin centre, Omega_b its solid angle and h a smoothing
// bandwidth at bin scale, and the term is D_KL(pi || Q).
//
// Visibility term. The source rectangle mapped through K R K^-1 has signed
// shoelace area A; the term is max(0, |A| - W H) / (W H). Corner depths are
// clamped below at 1e-3 so the term stays finite when a corner reaches the
// camera plane.
//
// All gradients are ambient 3-vectors in e (the rotation formula is
// differentiated as written); the optimizer projects them onto the tangent
// plane.

#include <cstdint>
#include <span>
#include <vector>

#include "tilt/direction_stats.hpp"
#include "tilt/geometry.hpp"

namespace tilt {

/// Gradient of e -> R(g, e) n in denominator layout:
/// G(i, j) = d (R n)_j / d e_i, so grad_e f(R n) = G * grad_x f.
/// The expression is linear in n, which need not be unit.
Matrix3d grad_rotated_normal(const UnitVec3& e, const UnitVec3& g, const Vector3d& n);

struct RectificationProblem {
  UnitVec3 g{0, 1, 0};
  GaussianMixture p;
  SphericalHistogram q;
  CameraIntrinsics k;
  double lambda_e = 0.1;
  /// Kernel bandwidth h in radians; <= 0 selects the slant bin width of Q.
  double bandwidth = 0.0;

  double effective_bandwidth() const;
};

struct ObjectiveTerms {
  double kl = 0;
  double visibility = 0;
  double total = 0;
};

ObjectiveTerms objective_terms(const RectificationProblem& problem, const UnitVec3& e);
inline double objective(const RectificationProblem& problem, const UnitVec3& e) {
  return objective_terms(problem, e).total;
}

/// Distribution-matching term alone and its gradient.
double kl_term(const RectificationProblem& problem, const UnitVec3& e);
Vector3d kl_term_grad(const RectificationProblem& problem, const UnitVec3& e);

/// Visibility surrogate alone and its (sub)gradient.
double visibility_term(const CameraIntrinsics& k, const UnitVec3& g, const UnitVec3& e);
Vector3d visibility_term_grad(const CameraIntrinsics& k, const UnitVec3& g, const UnitVec3& e);

Vector3d objective_grad(const RectificationProblem& problem, const UnitVec3& e);

/// Rectified source-rectangle corners A, B, C, D in pixels.
std::array<Vector2d, 4> warped_corners(const CameraIntrinsics& k, const Rotation3& r);

struct RectifierConfig {
  double lambda_e = 0.1;
  double step = 0.05;
  int iters = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// The step is multiplied by `decay` every `decay_every` iterations
  /// (decay_every <= 0 keeps it fixed).
  int decay_every = 100;
  double decay = 0.5;

  void validate() const;
};

struct RectifierResult {
  UnitVec3 e_star;
  std::vector<double> objective_trace;  // objective at every iterate, init first
  std::vector<UnitVec3> iterates;
  bool converged = false;
};

/// Projected gradient descent e <- normalize(e - step (I - e e^T) grad).
/// cfg.lambda_e overrides problem.lambda_e. Throws AntipodalDrift when an
/// iterate comes within 1e-6 of -g.
RectifierResult optimize_e(const RectificationProblem& problem, const UnitVec3& init,
                           const RectifierConfig& cfg);

/// Histogram of the normals after rotating them by R(g, e).
SphericalHistogram rectified_histogram(std::span<const UnitVec3> normals, const UnitVec3& g,
                                       const UnitVec3& e, const SphereBinning& binning, double floor);

}  // namespace tilt
