#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "tilt/geometry.hpp"

namespace tilt {

/// Thresholds, in degrees, for the fraction-below statistics.
inline constexpr std::array<double, 5> kErrorThresholdsDeg{5.0, 7.5, 11.25, 22.5, 30.0};

/// Angular-error statistics, in degrees.
struct EvalSummary {
  double mean = 0;
  double median = 0;
  double rmse = 0;
  std::array<double, 5> below{};  // fraction with error < kErrorThresholdsDeg[i] (1e-9 deg slack)
  std::size_t count = 0;

  bool operator==(const EvalSummary&) const = default;
};

struct ErrorDecomposition {
  double delta = 0;
  double d_theta = 0;
  double d_phi = 0;
  bool degenerate = false;
};

template <typename Scalar>
Scalar angular_error(const UnitVector3<Scalar>& pred, const UnitVector3<Scalar>& gt) {
  return std::acos(std::clamp(pred.dot(gt), Scalar(-1), Scalar(1)));
}

/// errors in radians. Median is the lower central order statistic.
EvalSummary summarize(std::span<const double> errors);

ErrorDecomposition slant_tilt_decompose(const UnitVec3& pred, const UnitVec3& gt, double eps = 1e-9);

/// d_theta + d_phi >= delta - 1e-9
bool triangle_check(const UnitVec3& pred, const UnitVec3& gt, double eps = 1e-9);

}  // namespace tilt
