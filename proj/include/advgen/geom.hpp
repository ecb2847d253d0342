#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace advgen {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm_sq(const Vec2& a) { return a.x * a.x + a.y * a.y; }
inline double norm(const Vec2& a) { return std::sqrt(norm_sq(a)); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline Vec2 rotate(const Vec2& p, double ang) {
  const double c = std::cos(ang), s = std::sin(ang);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}
inline Vec2 heading_dir(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Normalizes an angle to (-pi, pi].
double wrap_angle(double a);

// Axis-aligned rectangle rotated by theta about its center. half_length is
// along the heading axis, half_width across it.
struct OrientedBox {
  Vec2 center;
  double half_length = 0.0;
  double half_width = 0.0;
  double theta = 0.0;

  std::array<Vec2, 4> corners() const;
};

// Separating-axis test over the 4 edge normals. Touching boxes count as
// colliding.
bool boxes_collide(const OrientedBox& a, const OrientedBox& b);

// Minimum distance between box hulls; 0 when they collide.
double box_clearance(const OrientedBox& a, const OrientedBox& b);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);
bool segment_intersection_point(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                                const Vec2& q2, Vec2* out);
bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p);

struct PathProjection {
  double s = 0.0;        // arc length of the closest point
  double lateral = 0.0;  // signed offset, positive left of travel direction
  Vec2 point;            // closest point on the polyline
  size_t segment = 0;
};

// Arc-length parameterized polyline. Queries beyond the ends clamp.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts);

  bool empty() const { return pts_.size() < 2; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  PathProjection project(const Vec2& p) const;
  double distance_to(const Vec2& p) const;
  const std::vector<Vec2>& points() const { return pts_; }

 private:
  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

}  // namespace advgen
