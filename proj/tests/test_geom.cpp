#include <doctest.h>

#include <cmath>

#include "advgen/geom.hpp"
#include "advgen/rng.hpp"
#include "support/oracles.hpp"

using namespace advgen;

namespace {

OrientedBox box(double cx, double cy, double length, double width, double theta) {
  return OrientedBox{{cx, cy}, length * 0.5, width * 0.5, theta};
}

OrientedBox random_box(SplitMix64& rng) {
  return box(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0), rng.uniform(0.5, 10.0),
             rng.uniform(0.5, 10.0), rng.uniform(-kPi, kPi));
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
  CHECK(wrap_angle(2.0 * kPi + 0.25) == doctest::Approx(0.25));
}

TEST_CASE("boxes_collide basic cases") {
  // coincident unit squares
  CHECK(boxes_collide(box(0, 0, 1, 1, 0), box(0, 0, 1, 1, 0)));
  // far apart
  CHECK_FALSE(boxes_collide(box(0, 0, 1, 1, 0), box(10, 0, 1, 1, 0)));
  // touching edges count as collision
  CHECK(boxes_collide(box(0, 0, 2, 2, 0), box(2, 0, 2, 2, 0)));
}

TEST_CASE("boxes_collide rotated gap case matches the sampling oracle") {
  // 2x2 at origin vs 2x2 at (2.5, 0) rotated 45 degrees: the rotated square's
  // nearest corner stays right of x = 1
  const OrientedBox a = box(0, 0, 2, 2, 0);
  const OrientedBox b = box(2.5, 0, 2, 2, kPi / 4.0);
  CHECK_FALSE(boxes_collide(a, b));
  CHECK_FALSE(advgen::testing::boxes_collide_sampled(a, b, 0.01));
}

TEST_CASE("boxes_collide is symmetric and rigid-motion invariant") {
  SplitMix64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const OrientedBox a = random_box(rng);
    const OrientedBox b = random_box(rng);
    const bool ab = boxes_collide(a, b);
    CHECK(ab == boxes_collide(b, a));
    const Vec2 shift{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
    OrientedBox a2 = a;
    OrientedBox b2 = b;
    a2.center += shift;
    b2.center += shift;
    CHECK(ab == boxes_collide(a2, b2));
    if (!ab) {
      CHECK(box_clearance(a, b) == doctest::Approx(box_clearance(a2, b2)).epsilon(1e-9));
    }
  }
}

TEST_CASE("boxes_collide agrees with the dense-sampling oracle") {
  SplitMix64 rng(99);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const OrientedBox a = random_box(rng);
    const OrientedBox b = random_box(rng);
    double pitch = 0.01;
    if (std::fabs(advgen::testing::box_pair_margin(a, b)) < 0.02) {
      pitch = 0.001;  // tight pairs rerun at 1 mm
    }
    CHECK(boxes_collide(a, b) == advgen::testing::boxes_collide_sampled(a, b, pitch));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("box_clearance basics") {
  CHECK(box_clearance(box(0, 0, 2, 2, 0), box(5, 0, 2, 2, 0)) == doctest::Approx(3.0));
  CHECK(box_clearance(box(0, 0, 2, 2, 0), box(1, 0, 2, 2, 0)) == doctest::Approx(0.0));
  // diagonal separation: corner-to-corner distance between (1,1) and (3,3)
  const double d = box_clearance(box(0, 0, 2, 2, 0), box(4, 4, 2, 2, 0));
  CHECK(d == doctest::Approx(std::sqrt(8.0)).epsilon(1e-9));
}

TEST_CASE("point_in_polygon handles boundary and concave shapes") {
  const std::vector<Vec2> cross = {{-10, -2}, {-2, -2}, {-2, -10}, {2, -10}, {2, -2}, {10, -2},
                                   {10, 2},   {2, 2},   {2, 10},   {-2, 10}, {-2, 2}, {-10, 2}};
  CHECK(point_in_polygon(cross, {0, 0}));
  CHECK(point_in_polygon(cross, {0, -9}));
  CHECK(point_in_polygon(cross, {9, 0}));
  CHECK_FALSE(point_in_polygon(cross, {5, 5}));
  CHECK(point_in_polygon(cross, {10, 0}));  // boundary counts as inside
}

TEST_CASE("polyline projection and arc-length queries") {
  const Polyline line({{0, 0}, {10, 0}, {10, 10}});
  CHECK(line.length() == doctest::Approx(20.0));
  CHECK(line.point_at(5.0).x == doctest::Approx(5.0));
  CHECK(line.point_at(15.0).y == doctest::Approx(5.0));
  const PathProjection p = line.project({4.0, 3.0});
  CHECK(p.s == doctest::Approx(4.0));
  CHECK(p.lateral == doctest::Approx(3.0));  // left of travel is positive
  const PathProjection q = line.project({4.0, -2.0});
  CHECK(q.lateral == doctest::Approx(-2.0));
  CHECK(line.heading_at(15.0) == doctest::Approx(kPi / 2.0));
}

TEST_CASE("segment intersection point") {
  Vec2 p;
  CHECK(segment_intersection_point({-1, 0}, {1, 0}, {0, -1}, {0, 1}, &p));
  CHECK(p.x == doctest::Approx(0.0));
  CHECK(p.y == doctest::Approx(0.0));
  CHECK_FALSE(segment_intersection_point({-1, 0}, {1, 0}, {2, -1}, {2, 1}, &p));
  // parallel
  CHECK_FALSE(segment_intersection_point({0, 0}, {1, 0}, {0, 1}, {1, 1}, &p));
}
