#pragma once

// Test-only oracles, kept independent of the implementation paths they check.

#include <algorithm>
#include <cmath>

#include "advgen/geom.hpp"

namespace advgen::testing {

// Point containment without the SAT machinery: transform into the box frame
// and compare against the half extents.
inline bool point_in_box(const OrientedBox& b, const Vec2& p) {
  const Vec2 local = rotate(p - b.center, -b.theta);
  return std::fabs(local.x) <= b.half_length + 1e-12 &&
         std::fabs(local.y) <= b.half_width + 1e-12;
}

// Dense-sampling collision oracle: grid the intersection of the two
// axis-aligned bounding boxes at `pitch` and look for a point inside both.
inline bool boxes_collide_sampled(const OrientedBox& a, const OrientedBox& b, double pitch) {
  auto aabb = [](const OrientedBox& box, double& x0, double& y0, double& x1, double& y1) {
    const auto cs = box.corners();
    x0 = x1 = cs[0].x;
    y0 = y1 = cs[0].y;
    for (const Vec2& c : cs) {
      x0 = std::min(x0, c.x);
      x1 = std::max(x1, c.x);
      y0 = std::min(y0, c.y);
      y1 = std::max(y1, c.y);
    }
  };
  double ax0, ay0, ax1, ay1, bx0, by0, bx1, by1;
  aabb(a, ax0, ay0, ax1, ay1);
  aabb(b, bx0, by0, bx1, by1);
  const double x0 = std::max(ax0, bx0) - pitch;
  const double x1 = std::min(ax1, bx1) + pitch;
  const double y0 = std::max(ay0, by0) - pitch;
  const double y1 = std::min(ay1, by1) + pitch;
  if (x0 > x1 || y0 > y1) {
    return false;
  }
  for (double x = x0; x <= x1; x += pitch) {
    for (double y = y0; y <= y1; y += pitch) {
      if (point_in_box(a, {x, y}) && point_in_box(b, {x, y})) {
        return true;
      }
    }
  }
  return false;
}

// Analytic margin used to decide which random pairs are too tight for a
// given sampling pitch: hull clearance when separated, SAT penetration depth
// when overlapping.
inline double box_pair_margin(const OrientedBox& a, const OrientedBox& b) {
  if (!boxes_collide(a, b)) {
    return box_clearance(a, b);
  }
  const auto ca = a.corners();
  const auto cb = b.corners();
  double depth = 1e18;
  const Vec2 axes[4] = {heading_dir(a.theta), Vec2{-std::sin(a.theta), std::cos(a.theta)},
                        heading_dir(b.theta), Vec2{-std::sin(b.theta), std::cos(b.theta)}};
  for (const Vec2& axis : axes) {
    double alo = 1e18, ahi = -1e18, blo = 1e18, bhi = -1e18;
    for (int i = 0; i < 4; ++i) {
      alo = std::min(alo, dot(ca[static_cast<size_t>(i)], axis));
      ahi = std::max(ahi, dot(ca[static_cast<size_t>(i)], axis));
      blo = std::min(blo, dot(cb[static_cast<size_t>(i)], axis));
      bhi = std::max(bhi, dot(cb[static_cast<size_t>(i)], axis));
    }
    depth = std::min(depth, std::min(ahi, bhi) - std::max(alo, blo));
  }
  return depth;
}

}  // namespace advgen::testing
