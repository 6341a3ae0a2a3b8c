#pragma once

// Finite-difference audit of every closed-form gradient in the library.

#include <cstdint>
#include <string>
#include <vector>

namespace tilt {

struct GradcheckConfig {
  int trials = 1000;
  std::uint64_t seed = 0;
  /// Negates every analytic gradient before comparison; the audit must fail.
  bool flip_sign = false;

  void validate() const;
};

struct GradcheckSuite {
  std::string name;
  int instances = 0;
  double max_rel_error = 0;
  double tolerance = 0;
  bool pass() const { return instances > 0 && max_rel_error < tolerance; }
};

struct GradcheckReport {
  std::vector<GradcheckSuite> suites;
  bool pass() const {
    for (const auto& s : suites) {
      if (!s.pass()) return false;
    }
    return !suites.empty();
  }
};

/// Suites: l2, angular, truncated_angular, rotated_normal_jacobian,
/// gmm_density, objective. Each runs `trials` random instances.
GradcheckReport run_gradcheck(const GradcheckConfig& cfg);

}  // namespace tilt
