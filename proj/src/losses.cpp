#include "tilt/losses.hpp"

namespace tilt {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double plane_consistency_loss(const AngleMap& pred, std::span<const Mask> planes) {
  double total = 0;
  for (const Mask& plane : planes) {
    if (plane.width != pred.width || plane.height != pred.height) {
      throw InvalidArgument("plane_consistency_loss: mask and angle map differ in size");
    }
    std::vector<const SlantTilt*> members;
    for (int v = 0; v < plane.height; ++v) {
      for (int u = 0; u < plane.width; ++u) {
        if (plane(u, v)) members.push_back(&pred.at(u, v));
      }
    }
    if (members.empty()) throw EmptyMask("plane_consistency_loss: empty plane mask");

    double theta = 0, s = 0, c = 0;
    for (const SlantTilt* a : members) {
      theta += a->theta;
      s += std::sin(a->phi);
      c += std::cos(a->phi);
    }
    const SlantTilt mean{theta / double(members.size()), std::atan2(s, c)};

    std::vector<double> dev;
    dev.reserve(members.size());
    for (const SlantTilt* a : members) dev.push_back(slant_tilt_loss(*a, mean));
    total += pairwise_sum(dev) / double(members.size());
  }
  return total;
}

}  // namespace tilt
