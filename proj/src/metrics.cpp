#include "tilt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tilt/errors.hpp"
#include "tilt/losses.hpp"

namespace tilt {

namespace {
constexpr double kDeg = 180.0 / std::numbers::pi;
// Values this close to a threshold count as on it (absorbs unit-conversion rounding).
constexpr double kThresholdSlackDeg = 1e-9;
}

EvalSummary summarize(std::span<const double> errors) {
  if (errors.empty()) throw EmptyInput("summarize: no errors");
  const std::size_t n = errors.size();
  std::vector<double> deg(n), sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = errors[i] * kDeg;
    sq[i] = deg[i] * deg[i];
  }

  EvalSummary s;
  s.count = n;
  s.mean = pairwise_sum(deg) / double(n);
  s.rmse = std::sqrt(pairwise_sum(sq) / double(n));
  for (std::size_t t = 0; t < kErrorThresholdsDeg.size(); ++t) {
    const auto hits = std::count_if(deg.begin(), deg.end(), [&](double d) { return d < kErrorThresholdsDeg[t] - kThresholdSlackDeg; });
    s.below[t] = double(hits) / double(n);
  }
  const std::size_t mid = (n - 1) / 2;
  std::nth_element(deg.begin(), deg.begin() + std::ptrdiff_t(mid), deg.end());
  s.median = deg[mid];
  return s;
}

ErrorDecomposition slant_tilt_decompose(const UnitVec3& pred, const UnitVec3& gt, double eps) {
  ErrorDecomposition out;
  out.delta = angular_error(pred, gt);
  const Vector2d a(pred.x(), pred.y());
  const Vector2d b(gt.x(), gt.y());
  const double na = a.norm(), nb = b.norm();
  if (na < eps || nb < eps) {
    out.degenerate = true;
    out.d_theta = out.delta;
    return out;
  }
  out.d_phi = std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0));
  out.d_theta = std::abs(std::acos(std::min(na, 1.0)) - std::acos(std::min(nb, 1.0)));
  return out;
}

bool triangle_check(const UnitVec3& pred, const UnitVec3& gt, double eps) {
  const ErrorDecomposition d = slant_tilt_decompose(pred, gt, eps);
  return d.d_theta + d.d_phi >= d.delta - 1e-9;
}

}  // namespace tilt
