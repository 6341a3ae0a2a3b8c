#pragma once

// Distributions of surface-normal directions: an equal-angle spherical
// histogram (the training distribution Q) and an isotropic Gaussian mixture
// in R^3 (the image distribution P).

#include <cstdint>
#include <span>
#include <vector>

#include "tilt/geometry.hpp"

namespace tilt {

/// Equal-angle (slant x tilt) grid over the sphere.
///
/// Slant rows split [-pi/2, pi/2] evenly. Tilt columns are centred on
/// -pi + c * (2 pi / n_phi), so tilts 0 and +-pi/2 sit at bin centres for
/// n_phi divisible by 4. The two polar rows are caps: every direction in them
/// lands in column 0, and the remaining columns of those rows have zero solid
/// angle. The default resolution (odd n_theta) puts slant 0 at a row centre.
struct SphereBinning {
  int n_theta = 19;
  int n_phi = 36;

  int size() const { return n_theta * n_phi; }
  int bin_of(const Vector3d& n) const;
  int row_of(int bin) const { return bin / n_phi; }
  int col_of(int bin) const { return bin % n_phi; }
  bool is_cap_row(int row) const { return row == 0 || row == n_theta - 1; }
  /// Representative direction of a bin (the pole for cap bins).
  Vector3d center(int bin) const;
  double solid_angle(int bin) const;
  void validate() const;

  bool operator==(const SphereBinning&) const = default;
};

struct SphericalHistogram {
  SphereBinning binning;
  double floor = 1e-8;
  std::vector<double> mass;  // row-major, slant then tilt

  double operator[](int bin) const { return mass[bin]; }
};

/// Raw bin counts of a set of directions.
std::vector<double> bin_counts(std::span<const UnitVec3> normals, const SphereBinning& binning);

/// Normalized counts plus `floor` on every bin, renormalized to sum 1.
SphericalHistogram histogram_from_counts(const std::vector<double>& counts, const SphereBinning& binning,
                                         double floor = 1e-8);

SphericalHistogram histogram_from_normals(std::span<const UnitVec3> normals,
                                          const SphereBinning& binning = {}, double floor = 1e-8);

/// D_KL(P || Q) = sum_b P_b log(P_b / Q_b).
double kl_divergence(const SphericalHistogram& p, const SphericalHistogram& q);

/// Bins ordered by decreasing mass (ties by index), first `count` of them.
std::vector<int> top_bins(const SphericalHistogram& h, int count);

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Vector3d> means;
  std::vector<double> variances;

  int k() const { return int(weights.size()); }
  void validate() const;
};

/// Density of one isotropic mode.
double gaussian_density(const Vector3d& mean, double variance, const Vector3d& x);

double gmm_density(const GaussianMixture& p, const Vector3d& x);

/// d gmm_density / dx.
Vector3d gmm_density_grad(const GaussianMixture& p, const Vector3d& x);

struct GmmOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;  // on the mean per-sample log-likelihood
  double variance_floor = 1e-6;
};

struct GmmFit {
  GaussianMixture mixture;
  std::vector<double> log_likelihood;  // mean per-sample, one per EM iteration
};

/// EM with k-means++ seeding. Deterministic for a given seed. When the data
/// has fewer than k distinct points the mixture keeps fewer modes.
GmmFit fit_gmm_traced(std::span<const UnitVec3> normals, int k, std::uint64_t seed,
                      const GmmOptions& opts = {});

GaussianMixture fit_gmm(std::span<const UnitVec3> normals, int k, std::uint64_t seed,
                        const GmmOptions& opts = {});

}  // namespace tilt
