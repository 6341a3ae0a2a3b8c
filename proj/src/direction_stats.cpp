#include "tilt/direction_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>

#include "tilt/random.hpp"

namespace tilt {

namespace {

constexpr double kPi = std::numbers::pi;

double slant_of(const Vector3d& n) { return std::atan2(n.z(), std::hypot(n.x(), n.y())); }

}  // namespace

void SphereBinning::validate() const {
  if (n_theta < 1 || n_phi < 1) throw InvalidArgument("SphereBinning: resolution must be >= 1");
}

int SphereBinning::bin_of(const Vector3d& n) const {
  const double dtheta = kPi / n_theta;
  const int row = std::clamp(int(std::floor((slant_of(n) + kPi / 2) / dtheta)), 0, n_theta - 1);
  if (is_cap_row(row)) return row * n_phi;
  const double dphi = 2 * kPi / n_phi;
  const double phi = std::atan2(n.y(), n.x());
  int col = int(std::floor((phi + kPi) / dphi + 0.5)) % n_phi;
  if (col < 0) col += n_phi;
  return row * n_phi + col;
}

Vector3d SphereBinning::center(int bin) const {
  const int row = row_of(bin);
  if (row == 0) return Vector3d(0, 0, -1);
  if (row == n_theta - 1) return Vector3d(0, 0, 1);
  const double dtheta = kPi / n_theta;
  const double theta = -kPi / 2 + (row + 0.5) * dtheta;
  const double phi = -kPi + col_of(bin) * (2 * kPi / n_phi);
  return Vector3d(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), std::sin(theta));
}

double SphereBinning::solid_angle(int bin) const {
  const int row = row_of(bin);
  const double dtheta = kPi / n_theta;
  const double lo = -kPi / 2 + row * dtheta;
  const double band = std::sin(lo + dtheta) - std::sin(lo);
  if (is_cap_row(row)) return col_of(bin) == 0 ? 2 * kPi * band : 0.0;
  return band * (2 * kPi / n_phi);
}

std::vector<double> bin_counts(std::span<const UnitVec3> normals, const SphereBinning& binning) {
  binning.validate();
  std::vector<double> counts(binning.size(), 0.0);
  for (const auto& n : normals) counts[binning.bin_of(n.vec())] += 1.0;
  return counts;
}

SphericalHistogram histogram_from_counts(const std::vector<double>& counts, const SphereBinning& binning,
                                         double floor) {
  binning.validate();
  if (int(counts.size()) != binning.size()) throw BinningMismatch("histogram: count vector size");
  if (!(floor > 0)) throw InvalidArgument("histogram: floor must be > 0");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0)) throw EmptyInput("histogram: no samples");
  SphericalHistogram h{binning, floor, std::vector<double>(counts.size())};
  double sum = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    h.mass[b] = counts[b] / total + floor;
    sum += h.mass[b];
  }
  for (auto& m : h.mass) m /= sum;
  return h;
}

SphericalHistogram histogram_from_normals(std::span<const UnitVec3> normals, const SphereBinning& binning,
                                          double floor) {
  if (normals.empty()) throw EmptyInput("histogram_from_normals: no normals");
  return histogram_from_counts(bin_counts(normals, binning), binning, floor);
}

double kl_divergence(const SphericalHistogram& p, const SphericalHistogram& q) {
  if (!(p.binning == q.binning) || p.mass.size() != q.mass.size()) {
    throw BinningMismatch("kl_divergence: histograms use different binnings");
  }
  double d = 0;
  for (std::size_t b = 0; b < p.mass.size(); ++b) {
    if (p.mass[b] > 0) d += p.mass[b] * std::log(p.mass[b] / q.mass[b]);
  }
  return d;
}

std::vector<int> top_bins(const SphericalHistogram& h, int count) {
  std::vector<int> idx(h.mass.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return h.mass[a] > h.mass[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), std::size_t(std::max(count, 0))));
  return idx;
}

// --------------------------------------------------------------------------
// Gaussian mixture

void GaussianMixture::validate() const {
  if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size()) {
    throw InvalidArgument("GaussianMixture: inconsistent mode count");
  }
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("GaussianMixture: weights must sum to 1");
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (!(weights[j] > 0)) throw InvalidArgument("GaussianMixture: weights must be positive");
    if (!(variances[j] >= 1e-6)) throw InvalidArgument("GaussianMixture: variance below 1e-6");
  }
}

double gaussian_density(const Vector3d& mean, double variance, const Vector3d& x) {
  const double norm = std::pow(2 * kPi * variance, -1.5);
  return norm * std::exp(-(x - mean).squaredNorm() / (2 * variance));
}

double gmm_density(const GaussianMixture& p, const Vector3d& x) {
  double d = 0;
  for (int j = 0; j < p.k(); ++j) d += p.weights[j] * gaussian_density(p.means[j], p.variances[j], x);
  return d;
}

Vector3d gmm_density_grad(const GaussianMixture& p, const Vector3d& x) {
  Vector3d g = Vector3d::Zero();
  for (int j = 0; j < p.k(); ++j) {
    const double n = gaussian_density(p.means[j], p.variances[j], x);
    g += p.weights[j] * n * (p.means[j] - x) / p.variances[j];
  }
  return g;
}

namespace {

double log_sum_exp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// k-means++ seeding; stops early when every point coincides with a centre.
std::vector<Vector3d> seed_centers(std::span<const UnitVec3> x, int k, Rng& rng) {
  std::vector<Vector3d> centers{x[rng.index(x.size())].vec()};
  std::vector<double> d2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d2[i] = (x[i].vec() - centers[0]).squaredNorm();
  while (int(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (!(total > 0)) break;
    double target = rng.uniform() * total;
    std::size_t pick = x.size() - 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      target -= d2[i];
      if (target < 0 && d2[i] > 0) {
        pick = i;
        break;
      }
    }
    while (d2[pick] == 0 && pick > 0) --pick;
    centers.push_back(x[pick].vec());
    for (std::size_t i = 0; i < x.size(); ++i) {
      d2[i] = std::min(d2[i], (x[i].vec() - centers.back()).squaredNorm());
    }
  }
  return centers;
}

}  // namespace

GmmFit fit_gmm_traced(std::span<const UnitVec3> x, int k, std::uint64_t seed, const GmmOptions& opts) {
  if (k < 1) throw InvalidArgument("fit_gmm: k must be >= 1");
  if (int(x.size()) < k) throw TooFewSamples("fit_gmm: fewer samples than modes");
  Rng rng(seed);
  const std::size_t n = x.size();

  GaussianMixture gm;
  gm.means = seed_centers(x, k, rng);
  const int modes = int(gm.means.size());
  {
    // Hard assignment to the seeds gives the starting weights and spreads.
    std::vector<double> count(modes, 0.0), sq(modes, 0.0);
    for (const auto& p : x) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < modes; ++j) {
        const double d = (p.vec() - gm.means[j]).squaredNorm();
        if (d < best_d) best_d = d, best = j;
      }
      count[best] += 1;
      sq[best] += best_d;
    }
    for (int j = 0; j < modes; ++j) {
      gm.weights.push_back(std::max(count[j], 1.0));
      gm.variances.push_back(std::max(count[j] > 0 ? sq[j] / (3 * count[j]) : 0.0, opts.variance_floor));
    }
    const double w = std::accumulate(gm.weights.begin(), gm.weights.end(), 0.0);
    for (auto& wj : gm.weights) wj /= w;
  }

  GmmFit fit;
  std::vector<double> resp(n * modes);
  std::vector<double> logp(modes);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const int m = gm.k();
    // E-step
    double ll = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double var = gm.variances[j];
        logp[j] = std::log(gm.weights[j]) - 1.5 * std::log(2 * kPi * var) -
                  (x[i].vec() - gm.means[j]).squaredNorm() / (2 * var);
      }
      const double lse = log_sum_exp(logp.data(), m);
      ll += lse;
      for (int j = 0; j < m; ++j) resp[i * m + j] = std::exp(logp[j] - lse);
    }
    ll /= double(n);
    fit.log_likelihood.push_back(ll);
    if (iter > 0 && std::abs(ll - fit.log_likelihood[iter - 1]) < opts.tolerance) break;

    // M-step; modes that lose all responsibility are dropped.
    GaussianMixture next;
    for (int j = 0; j < m; ++j) {
      double r = 0;
      Vector3d mu = Vector3d::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        r += resp[i * m + j];
        mu += resp[i * m + j] * x[i].vec();
      }
      if (!(r > 1e-12 * double(n))) continue;
      mu /= r;
      double sq = 0;
      for (std::size_t i = 0; i < n; ++i) sq += resp[i * m + j] * (x[i].vec() - mu).squaredNorm();
      next.weights.push_back(r / double(n));
      next.means.push_back(mu);
      next.variances.push_back(std::max(sq / (3 * r), opts.variance_floor));
    }
    const double w = std::accumulate(next.weights.begin(), next.weights.end(), 0.0);
    for (auto& wj : next.weights) wj /= w;
    gm = std::move(next);
  }
  fit.mixture = std::move(gm);
  return fit;
}

GaussianMixture fit_gmm(std::span<const UnitVec3> normals, int k, std::uint64_t seed, const GmmOptions& opts) {
  return fit_gmm_traced(normals, k, seed, opts).mixture;
}

}  // namespace tilt
