#include "advgen/geom.hpp"

#include <algorithm>
#include <limits>

namespace advgen {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) {
    a += 2.0 * kPi;
  }
  return a - kPi;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 ax = heading_dir(theta);
  const Vec2 ay{-ax.y, ax.x};
  const Vec2 l = ax * half_length;
  const Vec2 w = ay * half_width;
  return {center + l + w, center + l - w, center - l - w, center - l + w};
}

namespace {

struct Interval {
  double lo, hi;
};

Interval project_onto(const std::array<Vec2, 4>& pts, const Vec2& axis) {
  double lo = dot(pts[0], axis), hi = lo;
  for (size_t i = 1; i < 4; ++i) {
    const double v = dot(pts[i], axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

bool boxes_collide(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {heading_dir(a.theta), Vec2{-std::sin(a.theta), std::cos(a.theta)},
                                    heading_dir(b.theta), Vec2{-std::sin(b.theta), std::cos(b.theta)}};
  for (const Vec2& axis : axes) {
    const Interval ia = project_onto(ca, axis);
    const Interval ib = project_onto(cb, axis);
    if (ia.hi < ib.lo || ib.hi < ia.lo) {
      return false;  // strict: touching projections still overlap
    }
  }
  return true;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = norm_sq(ab);
  if (len2 <= 0.0) {
    return distance(p, a);
  }
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double box_clearance(const OrientedBox& a, const OrientedBox& b) {
  if (boxes_collide(a, b)) {
    return 0.0;
  }
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

namespace {

int orientation_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

}  // namespace

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation_sign(p1, p2, q1);
  const int o2 = orientation_sign(p1, p2, q2);
  const int o3 = orientation_sign(q1, q2, p1);
  const int o4 = orientation_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool segment_intersection_point(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                                const Vec2& q2, Vec2* out) {
  const Vec2 r = p2 - p1;
  const Vec2 s = q2 - q1;
  const double denom = cross(r, s);
  if (std::fabs(denom) < 1e-12) {
    return false;  // parallel or degenerate
  }
  const double t = cross(q1 - p1, s) / denom;
  const double u = cross(q1 - p1, r) / denom;
  if (t < -1e-9 || t > 1.0 + 1e-9 || u < -1e-9 || u > 1.0 + 1e-9) {
    return false;
  }
  if (out != nullptr) {
    *out = p1 + r * t;
  }
  return true;
}

bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  const size_t n = poly.size();
  if (n < 3) {
    return false;
  }
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if (point_segment_distance(p, a, b) < 1e-9) {
      return true;  // boundary counts as inside
    }
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xint) {
        inside = !inside;
      }
    }
  }
  return inside;
}

Polyline::Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
  cum_.reserve(pts_.size());
  double s = 0.0;
  for (size_t i = 0; i < pts_.size(); ++i) {
    if (i > 0) {
      s += distance(pts_[i - 1], pts_[i]);
    }
    cum_.push_back(s);
  }
}

Vec2 Polyline::point_at(double s) const {
  if (pts_.empty()) {
    return {};
  }
  if (pts_.size() == 1 || s <= 0.0) {
    return pts_.front();
  }
  if (s >= length()) {
    return pts_.back();
  }
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const size_t i = static_cast<size_t>(it - cum_.begin());
  const double seg_len = cum_[i] - cum_[i - 1];
  const double t = seg_len > 0.0 ? (s - cum_[i - 1]) / seg_len : 0.0;
  return pts_[i - 1] + (pts_[i] - pts_[i - 1]) * t;
}

double Polyline::heading_at(double s) const {
  if (pts_.size() < 2) {
    return 0.0;
  }
  size_t i = 1;
  if (s > 0.0) {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), std::min(s, length() - 1e-9));
    i = std::min(pts_.size() - 1, static_cast<size_t>(it - cum_.begin()));
  }
  const Vec2 d = pts_[i] - pts_[i - 1];
  return std::atan2(d.y, d.x);
}

PathProjection Polyline::project(const Vec2& p) const {
  PathProjection best;
  if (pts_.empty()) {
    return best;
  }
  if (pts_.size() == 1) {
    best.point = pts_[0];
    best.lateral = distance(p, pts_[0]);
    return best;
  }
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < pts_.size(); ++i) {
    const Vec2 a = pts_[i];
    const Vec2 b = pts_[i + 1];
    const Vec2 ab = b - a;
    const double len2 = norm_sq(ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + ab * t;
    const double d2 = norm_sq(p - q);
    if (d2 < best_d2) {
      best_d2 = d2;
      best.point = q;
      best.segment = i;
      best.s = cum_[i] + t * std::sqrt(len2);
      const double side = cross(ab, p - a);
      best.lateral = std::sqrt(d2) * (side >= 0.0 ? 1.0 : -1.0);
    }
  }
  return best;
}

double Polyline::distance_to(const Vec2& p) const {
  return std::fabs(project(p).lateral);
}

}  // namespace advgen
