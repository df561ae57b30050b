// SPDX-License-Identifier: Apache-2.0

#include "pcx/geometry.hpp"

#include <algorithm>

namespace pcx {

Point3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, "centroid of an empty cloud");
  }
  double sx = 0.0, sy = 0.0, sz = 0.0;
  for (const Point3& p : cloud.points) {
    sx += p.x;
    sy += p.y;
    sz += p.z;
  }
  const double n = static_cast<double>(cloud.size());
  return {sx / n, sy / n, sz / n};
}

Aabb aabb(const PointCloud& cloud) {
  if (cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, "aabb of an empty cloud");
  }
  Aabb box{cloud.points.front(), cloud.points.front()};
  for (const Point3& p : cloud.points) {
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.min.z = std::min(box.min.z, p.z);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
    box.max.z = std::max(box.max.z, p.z);
  }
  return box;
}

PointCloud translate(const PointCloud& cloud, const Point3& offset) {
  PointCloud out = cloud;
  for (Point3& p : out.points) {
    p = p + offset;
  }
  return out;
}

PointCloud scale_about_centroid(const PointCloud& cloud, double factor) {
  if (cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, "scale of an empty cloud");
  }
  if (!(factor > 0.0)) {
    throw Error(ErrorCode::InvalidScale,
                "scale factor must be > 0, got " + std::to_string(factor));
  }
  const Point3 c = centroid(cloud);
  PointCloud out = cloud;
  for (Point3& p : out.points) {
    p = c + (p - c) * factor;
  }
  return out;
}

PointCloud rotate_yaw_about_centroid(const PointCloud& cloud, double angle_rad) {
  if (cloud.empty()) {
    throw Error(ErrorCode::EmptyCloud, "rotate of an empty cloud");
  }
  const Point3 c = centroid(cloud);
  const double cs = std::cos(angle_rad);
  const double sn = std::sin(angle_rad);
  PointCloud out = cloud;
  for (Point3& p : out.points) {
    const double dx = p.x - c.x;
    const double dy = p.y - c.y;
    p.x = c.x + cs * dx - sn * dy;
    p.y = c.y + sn * dx + cs * dy;
    // z copied verbatim
  }
  return out;
}

}  // namespace pcx
