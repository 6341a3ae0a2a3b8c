#pragma once

// Row-major pixel containers shared by every module.

#include <cstdint>
#include <utility>
#include <vector>

#include "tilt/errors.hpp"
#include "tilt/geometry.hpp"

namespace tilt {

struct ImageGrid {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;  // row-major, channel-interleaved

  ImageGrid() = default;
  ImageGrid(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {
    if (w < 0 || h < 0 || c < 1) throw InvalidArgument("ImageGrid: bad dimensions");
  }

  std::size_t index(int u, int v, int ch = 0) const {
    return (std::size_t(v) * width + u) * channels + ch;
  }
  double& at(int u, int v, int ch = 0) { return data[index(u, v, ch)]; }
  double at(int u, int v, int ch = 0) const { return data[index(u, v, ch)]; }
  long pixel_count() const { return long(width) * height; }
  bool same_shape(const ImageGrid& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

/// Per-pixel boolean mask stored as bytes (std::vector<bool> is avoided so
/// pixels can be written from several threads).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h, bool fill = false) : width(w), height(h), bits(std::size_t(w) * h, fill ? 1 : 0) {}

  bool operator()(int u, int v) const { return bits[std::size_t(v) * width + u] != 0; }
  void set(int u, int v, bool on) { bits[std::size_t(v) * width + u] = on ? 1 : 0; }
  bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
  long count() const {
    long n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  bool operator==(const Mask&) const = default;
};

/// Unit normals with a validity mask. Invalid pixels hold (0, 0, 0).
struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<Vector3d> normals;
  std::vector<std::uint8_t> valid;

  NormalMap() = default;
  NormalMap(int w, int h) : width(w), height(h), normals(std::size_t(w) * h, Vector3d::Zero()), valid(std::size_t(w) * h, 0) {}

  std::size_t index(int u, int v) const { return std::size_t(v) * width + u; }
  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }
  const Vector3d& at(int u, int v) const { return normals[index(u, v)]; }
  void set(int u, int v, const Vector3d& n) {
    normals[index(u, v)] = n.normalized();
    valid[index(u, v)] = 1;
  }
  void invalidate(int u, int v) {
    normals[index(u, v)] = Vector3d::Zero();
    valid[index(u, v)] = 0;
  }
  long pixel_count() const { return long(width) * height; }
  long valid_count() const {
    long n = 0;
    for (auto b : valid) n += b != 0;
    return n;
  }
  bool same_shape(const NormalMap& o) const { return width == o.width && height == o.height; }
  Mask validity() const {
    Mask m(width, height);
    m.bits = valid;
    return m;
  }
  /// Unit vectors of every valid pixel, in row-major order.
  std::vector<UnitVec3> valid_normals() const {
    std::vector<UnitVec3> out;
    out.reserve(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (valid[i]) out.emplace_back(normals[i]);
    }
    return out;
  }
};

/// Metric depth along the optical axis; valid pixels have depth > 0.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), depth(std::size_t(w) * h, 0.0), valid(std::size_t(w) * h, 0) {}

  std::size_t index(int u, int v) const { return std::size_t(v) * width + u; }
  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }
  double at(int u, int v) const { return depth[index(u, v)]; }
  void set(int u, int v, double d) {
    if (d > 0) {
      depth[index(u, v)] = d;
      valid[index(u, v)] = 1;
    } else {
      depth[index(u, v)] = 0;
      valid[index(u, v)] = 0;
    }
  }
};

}  // namespace tilt
