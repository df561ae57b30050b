// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pcx/error.hpp"

namespace pcx {

/// 3D point, coordinates in meters. Internal precision is always 64-bit
/// even when file formats store 32-bit floats; centroid accumulation over
/// large clouds is not reliable at 32 bits.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3() = default;
  Point3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double s) const { return {x * s, y * s, z * s}; }

  bool is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double dot(const Point3& a, const Point3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Point3& p) { return std::sqrt(dot(p, p)); }

struct Color {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Color& o) const { return r == o.r && g == o.g && b == o.b; }
};

/// Axis-aligned bounding box; min.c <= max.c on every axis.
struct Aabb {
  Point3 min;
  Point3 max;

  Point3 extent() const { return max - min; }
  Point3 half_extent() const { return extent() * 0.5; }
  Point3 center() const { return (min + max) * 0.5; }
};

/// Ordered sequence of points with an optional color channel. When colors
/// are present there is exactly one entry per point.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<Color>> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return colors.has_value(); }
};

/// Arithmetic mean of all point coordinates ("center of gravity" with
/// uniform mass). Straightforward summation; supported up to ~1e8 points.
/// Throws EmptyCloud on an empty input.
Point3 centroid(const PointCloud& cloud);

/// Component-wise min/max over all points. Throws EmptyCloud.
Aabb aabb(const PointCloud& cloud);

/// Shifts every point by `offset`. Colors and point order are untouched.
PointCloud translate(const PointCloud& cloud, const Point3& offset);

/// Uniform scale about the cloud centroid. The centroid is a fixed point of
/// the transform. Throws InvalidScale for factor <= 0, EmptyCloud.
PointCloud scale_about_centroid(const PointCloud& cloud, double factor);

/// Rotation about the vertical (z) axis through the centroid. z coordinates
/// are copied verbatim. Throws EmptyCloud.
PointCloud rotate_yaw_about_centroid(const PointCloud& cloud, double angle_rad);

}  // namespace pcx
