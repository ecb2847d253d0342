#include <doctest.h>

#include <cmath>

#include "advgen/controllers.hpp"

using namespace advgen;

namespace {

ControlContext context(const Polyline* path, double desired, const DynLimits* limits) {
  ControlContext ctx;
  ctx.reference_path = path;
  ctx.desired_speed = desired;
  ctx.dt = 0.1;
  ctx.limits = limits;
  return ctx;
}

}  // namespace

TEST_CASE("IDM acceleration matches hand-computed values") {
  IdmParams p;  // T = 1.5, a_max = 3, b = 4, s0 = 2

  SUBCASE("free road from standstill gives a_max") {
    CHECK(idm_acceleration(p, 0.0, 15.0, -1.0, 0.0) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("free road at the desired speed gives zero") {
    CHECK(idm_acceleration(p, 15.0, 15.0, -1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("worked interaction example to 1e-9") {
    // v = 10, v0 = 15, gap = 30, closing = 0:
    // s* = 2 + 10*1.5 = 17, a = 3*(1 - (10/15)^4 - (17/30)^2)
    const double expected = 3.0 * (1.0 - 16.0 / 81.0 - 289.0 / 900.0);
    CHECK(std::fabs(idm_acceleration(p, 10.0, 15.0, 30.0, 0.0) - expected) < 1e-9);
  }
}

TEST_CASE("IDM step through the controller interface") {
  const Polyline path({{-100, 0}, {400, 0}});
  const DynLimits limits;
  ControllerSpec spec;
  spec.kind = ControllerKind::idm;
  const BoxSize ego_size{4.5, 2.0};

  SUBCASE("no leader: free-road term only") {
    const VehicleState ego{0, 0, 0, 0, 0};
    const ControlAction a =
        step_controller(spec, ego, ego_size, {}, context(&path, 15.0, &limits));
    CHECK(a.a_long == doctest::Approx(3.0));
  }
  SUBCASE("leader ahead produces the worked-example acceleration") {
    const VehicleState ego{0, 0, 10, 0, 0};
    // gap must be 30: leader center at 30 + (4.5 + 4.5)/2 = 34.5
    const std::vector<ObservedVehicle> others = {{{34.5, 0.0}, 10.0, 0.0, {4.5, 2.0}}};
    const ControlAction a =
        step_controller(spec, ego, ego_size, others, context(&path, 15.0, &limits));
    const double expected = 3.0 * (1.0 - 16.0 / 81.0 - 289.0 / 900.0);
    CHECK(std::fabs(a.a_long - expected) < 1e-9);
  }
  SUBCASE("vehicles outside the corridor are ignored") {
    const VehicleState ego{0, 0, 10, 0, 0};
    const std::vector<ObservedVehicle> others = {{{20.0, 6.0}, 0.0, 0.0, {4.5, 2.0}}};
    const ControlAction a =
        step_controller(spec, ego, ego_size, others, context(&path, 15.0, &limits));
    CHECK(a.a_long == doctest::Approx(3.0 * (1.0 - std::pow(10.0 / 15.0, 4.0))));
  }
}

TEST_CASE("cruise controller brakes below the TTC threshold") {
  const Polyline path({{-100, 0}, {400, 0}});
  const DynLimits limits;
  ControllerSpec spec;
  spec.kind = ControllerKind::cruise;
  const BoxSize ego_size{4.5, 2.0};
  const VehicleState ego{0, 0, 10, 0, 0};

  SUBCASE("stopped obstacle 1 s ahead triggers the brake") {
    // gap = 10 m, closing 10 m/s: TTC = 1 s < 2 s
    const std::vector<ObservedVehicle> others = {{{14.5, 0.0}, 0.0, 0.0, {4.5, 2.0}}};
    const ControlAction a =
        step_controller(spec, ego, ego_size, others, context(&path, 10.0, &limits));
    CHECK(a.a_long == doctest::Approx(-4.0));
  }
  SUBCASE("comfortable headway holds the set speed") {
    const std::vector<ObservedVehicle> others = {{{60.0, 0.0}, 10.0, 0.0, {4.5, 2.0}}};
    const ControlAction a =
        step_controller(spec, ego, ego_size, others, context(&path, 10.0, &limits));
    CHECK(a.a_long == doctest::Approx(0.0));
  }
}

TEST_CASE("expert controller evades laterally when a corridor is free, else brakes") {
  const Polyline path({{-100, 0}, {400, 0}});
  const DynLimits limits;
  ControllerSpec spec;
  spec.kind = ControllerKind::expert;
  const BoxSize ego_size{4.5, 2.0};
  const VehicleState ego{0, 0, 10, 0, 0};
  // threat slightly left of dead ahead, converging
  const ObservedVehicle threat{{12.0, 0.3}, 0.0, 0.0, {4.5, 2.0}};

  SUBCASE("free right corridor: steer away from the threat side") {
    const ControlAction a =
        step_controller(spec, ego, ego_size, {threat}, context(&path, 10.0, &limits));
    CHECK(a.curvature < 0.0);  // evade to the right
    CHECK(a.a_long > -1.6);    // no emergency brake
  }
  SUBCASE("blocked corridors: brake instead") {
    const ObservedVehicle right_block{{5.0, -3.0}, 10.0, 0.0, {4.5, 2.0}};
    const ControlAction a = step_controller(spec, ego, ego_size, {threat, right_block},
                                            context(&path, 10.0, &limits));
    CHECK(a.a_long == doctest::Approx(-4.0));
  }
}

TEST_CASE("actions are clipped to the dynamic limits") {
  const Polyline path({{0, 0}, {1, 5}, {1.5, 10}});  // sharp turn demands high curvature
  DynLimits limits;
  limits.a_lat_max = 2.0;
  ControllerSpec spec;
  spec.kind = ControllerKind::idm;
  const VehicleState ego{0, 0, 10, 0, 0};
  const ControlAction a = step_controller(spec, ego, {4.5, 2.0}, {}, context(&path, 10.0, &limits));
  CHECK(std::fabs(a.curvature) <= 2.0 / 100.0 + 1e-12);  // a_lat_max / v^2
}
